"""Per-dimension min-max normalization to the [-1, 1] box."""

from __future__ import annotations

import dataclasses

import numpy as np

from ..errors import DimMismatch


@dataclasses.dataclass(frozen=True, eq=False)
class Normalizer:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, data) -> "Normalizer":
        data = np.asarray(data, dtype=np.float64)
        flat = data.reshape(-1, data.shape[-1])
        if flat.size == 0:
            raise DimMismatch("cannot fit a normalizer to empty data")
        return cls(lo=flat.min(axis=0).copy(), hi=flat.max(axis=0).copy())

    @property
    def dim(self) -> int:
        return int(self.lo.shape[0])

    def _check(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.dim:
            raise DimMismatch(
                f"expected trailing dimension {self.dim}, got {x.shape[-1]}")

    def normalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        z = 2.0 * (x - self.lo) / safe - 1.0
        # constant dimensions carry no signal: pin them to 0
        return np.where(span > 0, z, 0.0)

    def denormalize(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        self._check(z)
        span = self.hi - self.lo
        x = self.lo + (z + 1.0) * span / 2.0
        return np.where(span > 0, x, self.lo)

    def to_document(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_document(cls, doc: dict) -> "Normalizer":
        return cls(lo=np.asarray(doc["lo"], dtype=np.float64),
                   hi=np.asarray(doc["hi"], dtype=np.float64))
