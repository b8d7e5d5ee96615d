"""Shared error taxonomy.

Every error raised by skilldesk derives from SkilldeskError so callers can
catch the whole family with one clause. Errors carry enough context to be
actionable (indices, line numbers, offending values) instead of bare strings.
"""
from __future__ import annotations


class SkilldeskError(Exception):
    """Base class for all skilldesk errors."""


# ---- skill library ----

class DuplicateName(SkilldeskError):
    pass


class InvalidSkill(SkilldeskError):
    pass


class FormatError(SkilldeskError):
    """A persisted document failed validation.

    line/column are 1-based when known; record_index is set for
    record-oriented files (episodes, reports).
    """

    def __init__(self, message: str, *, line: int | None = None,
                 column: int | None = None, record_index: int | None = None):
        self.line = line
        self.column = column
        self.record_index = record_index
        loc = []
        if record_index is not None:
            loc.append(f"record {record_index}")
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)


# ---- selector / backends ----

class EmptyRequest(SkilldeskError):
    pass


class MissingPreconditions(SkilldeskError):
    pass


class BackendError(SkilldeskError):
    """Transport or protocol failure when talking to a model backend."""


# ---- diffusion policy ----

class EmptyDataset(SkilldeskError):
    pass


class DimMismatch(SkilldeskError):
    pass


class ShapeMismatch(SkilldeskError):
    pass


class DivergedLoss(SkilldeskError):
    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training loss diverged at epoch {epoch}: {loss}")


class EnvError(SkilldeskError):
    pass


# ---- tabletop sim ----

class PlacementFailure(SkilldeskError):
    pass


class NonFiniteAction(SkilldeskError):
    pass


class DegenerateRectangle(SkilldeskError):
    pass


class UnknownTask(SkilldeskError):
    pass


class VocabularyMismatch(SkilldeskError):
    pass


class UnreachableWaypoint(SkilldeskError):
    pass


# ---- demo recorder ----

class TimingViolation(SkilldeskError):
    def __init__(self, index: int, dt: float, tolerance: float):
        self.index = index
        self.dt = dt
        self.tolerance = tolerance
        super().__init__(
            f"frame {index}: spacing {dt:.6f}s violates nominal 0.1s"
            f" (tolerance {tolerance}s)")


class EmptyEpisode(SkilldeskError):
    pass


class OutOfOrderFrame(SkilldeskError):
    def __init__(self, index: int, t_prev: float, t_new: float):
        self.index = index
        super().__init__(
            f"frame {index}: timestamp {t_new} does not increase past {t_prev}")


# ---- eval harness ----

class OutOfRange(SkilldeskError):
    pass


# ---- orchestrator ----

class BusyError(SkilldeskError):
    def __init__(self, mode: str):
        self.mode = mode
        super().__init__(f"system is busy: mode={mode}")


class NoDemonstrations(SkilldeskError):
    pass


class SessionMismatch(SkilldeskError):
    pass


class SceneMismatch(SkilldeskError):
    pass


class PolicyMissing(SkilldeskError):
    pass
