"""Demonstration recording: timed frame streams and episode storage.

An episode is a fixed-rate stream of frames captured while an operator
(or a scripted stand-in) drives the end effector. Frames carry the full
4x4 end-effector transform, the commanded action, an optional image
reference, and free-form extras. Training consumes the per-frame
observation vector stashed under ``extras["obs"]``.

Episodes are stored one file per episode as newline-delimited JSON with
a header record, grouped in one directory per skill. Saving the same
episode twice produces byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import uuid
from datetime import datetime, timezone
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    EmptyDataset,
    EmptyEpisode,
    FormatError,
    OutOfOrderFrame,
    TimingViolation,
)

EPISODE_SCHEMA_VERSION = 1
DT_NOMINAL = 0.1
DT_TOLERANCE = 0.02
_FORMAT = "skilldesk-episode"


def planar_transform(x: float, y: float, theta: float) -> list[list[float]]:
    """4x4 row-major homogeneous transform for a planar pose."""
    c, s = math.cos(theta), math.sin(theta)
    return [
        [c, -s, 0.0, x],
        [s, c, 0.0, y],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]


def planar_pose(transform: Sequence[Sequence[float]]) -> tuple[float, float, float]:
    return (
        float(transform[0][3]),
        float(transform[1][3]),
        math.atan2(transform[1][0], transform[0][0]),
    )


def _check_transform(transform) -> None:
    m = np.asarray(transform, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"ee_transform must be 4x4, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("ee_transform contains non-finite values")
    r = m[:3, :3]
    if not np.allclose(r @ r.T, np.eye(3), atol=1e-6):
        raise ValueError("rotation block is not orthonormal")
    if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
        raise ValueError("bottom row must be [0, 0, 0, 1]")


@dataclasses.dataclass(frozen=True)
class Frame:
    t: float
    ee_transform: tuple  # 4 rows of 4 floats
    action: tuple
    image_ref: Optional[str] = None
    extras: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        _check_transform(self.ee_transform)
        rows = tuple(tuple(float(v) for v in row) for row in self.ee_transform)
        object.__setattr__(self, "ee_transform", rows)
        object.__setattr__(self, "action",
                           tuple(float(a) for a in self.action))
        if not math.isfinite(self.t):
            raise ValueError("frame time must be finite")


@dataclasses.dataclass(frozen=True)
class Episode:
    id: str
    skill: str
    operator: str
    created: str
    frames: tuple
    dt_nominal: float = DT_NOMINAL
    success: bool = True

    @property
    def duration(self) -> float:
        """Elapsed time from first to last frame (0 for a single frame)."""
        return self.frames[-1].t - self.frames[0].t

    def __len__(self) -> int:
        return len(self.frames)


def validate_frames(frames: Sequence[Frame], dt_nominal: float = DT_NOMINAL,
                    tolerance: float = DT_TOLERANCE) -> None:
    if not frames:
        raise EmptyEpisode("episode has no frames")
    for i in range(1, len(frames)):
        dt = frames[i].t - frames[i - 1].t
        if dt <= 0:
            raise OutOfOrderFrame(i, frames[i - 1].t, frames[i].t)
        if abs(dt - dt_nominal) > tolerance:
            raise TimingViolation(i, dt, tolerance)


class RecordingSession:
    """Accumulates frames for one demonstration and validates cadence.

    Frames must arrive with strictly increasing timestamps; the interval
    check against the nominal rate happens in :meth:`finish` so a session
    aborted mid-way never raises on append.
    """

    def __init__(self, skill: str, operator: str = "operator",
                 dt_nominal: float = DT_NOMINAL,
                 tolerance: float = DT_TOLERANCE,
                 now: Callable[[], str] | None = None,
                 episode_id: str | None = None):
        self.skill = skill
        self.operator = operator
        self.dt_nominal = dt_nominal
        self.tolerance = tolerance
        self._now = now or _utc_now
        self._id = episode_id or uuid.uuid4().hex[:12]
        self._frames: list[Frame] = []

    def append(self, frame: Frame) -> None:
        if self._frames and frame.t <= self._frames[-1].t:
            raise OutOfOrderFrame(len(self._frames), self._frames[-1].t,
                                  frame.t)
        self._frames.append(frame)

    def add(self, t: float, x: float, y: float, theta: float,
            action, image_ref: Optional[str] = None,
            extras: Optional[dict] = None) -> None:
        self.append(Frame(t=t, ee_transform=planar_transform(x, y, theta),
                          action=tuple(action), image_ref=image_ref,
                          extras=extras or {}))

    def __len__(self) -> int:
        return len(self._frames)

    def finish(self, success: bool = True) -> Episode:
        validate_frames(self._frames, self.dt_nominal, self.tolerance)
        return Episode(
            id=self._id,
            skill=self.skill,
            operator=self.operator,
            created=self._now(),
            frames=tuple(self._frames),
            dt_nominal=self.dt_nominal,
            success=success,
        )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---- serialization ----

def _frame_to_record(frame: Frame) -> dict:
    return {
        "t": frame.t,
        "ee_transform": [list(row) for row in frame.ee_transform],
        "action": list(frame.action),
        "image_ref": frame.image_ref,
        "extras": frame.extras,
    }


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def episode_to_jsonl(episode: Episode) -> str:
    header = {
        "format": _FORMAT,
        "schema_version": EPISODE_SCHEMA_VERSION,
        "id": episode.id,
        "skill": episode.skill,
        "operator": episode.operator,
        "created": episode.created,
        "dt_nominal": episode.dt_nominal,
        "success": episode.success,
        "frame_count": len(episode.frames),
    }
    lines = [_dump(header)]
    lines.extend(_dump(_frame_to_record(f)) for f in episode.frames)
    return "\n".join(lines) + "\n"


def episode_from_jsonl(text: str) -> Episode:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise FormatError("empty episode file", record_index=0)
    records = []
    for i, line in enumerate(lines):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad JSON: {exc.msg}", record_index=i) from exc
    header = records[0]
    if not isinstance(header, dict) or header.get("format") != _FORMAT:
        raise FormatError("missing episode header", record_index=0)
    if header.get("schema_version") != EPISODE_SCHEMA_VERSION:
        raise FormatError(
            f"unsupported schema version {header.get('schema_version')!r}",
            record_index=0)
    frames = []
    for i, rec in enumerate(records[1:], start=1):
        try:
            frames.append(Frame(
                t=float(rec["t"]),
                ee_transform=rec["ee_transform"],
                action=rec["action"],
                image_ref=rec.get("image_ref"),
                extras=rec.get("extras", {}),
            ))
        except FormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad frame record: {exc}",
                              record_index=i) from exc
    if len(frames) != header.get("frame_count"):
        raise FormatError(
            f"frame_count says {header.get('frame_count')}, "
            f"file has {len(frames)}", record_index=0)
    return Episode(
        id=str(header["id"]),
        skill=str(header["skill"]),
        operator=str(header.get("operator", "operator")),
        created=str(header.get("created", "")),
        frames=tuple(frames),
        dt_nominal=float(header.get("dt_nominal", DT_NOMINAL)),
        success=bool(header.get("success", True)),
    )


def skill_slug(skill: str) -> str:
    return skill.strip().lower().replace(" ", "-")


def episode_path(root: str, episode: Episode) -> str:
    return os.path.join(root, skill_slug(episode.skill),
                        f"{episode.id}.jsonl")


def save_episode(root: str, episode: Episode) -> str:
    path = episode_path(root, episode)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(episode_to_jsonl(episode))
    return path


def load_episode(path: str) -> Episode:
    with open(path, encoding="utf-8") as fh:
        return episode_from_jsonl(fh.read())


def list_episode_paths(root: str, skill: Optional[str] = None) -> list[str]:
    dirs = [os.path.join(root, skill_slug(skill))] if skill else [
        os.path.join(root, d) for d in sorted(os.listdir(root))
        if os.path.isdir(os.path.join(root, d))
    ] if os.path.isdir(root) else []
    paths = []
    for d in dirs:
        if not os.path.isdir(d):
            continue
        paths.extend(os.path.join(d, f) for f in sorted(os.listdir(d))
                     if f.endswith(".jsonl"))
    return paths


def load_dataset(root: str, skill: str,
                 include_failed: bool = False) -> list[Episode]:
    """All stored episodes for a skill, successful ones only by default."""
    episodes = [load_episode(p) for p in list_episode_paths(root, skill)]
    if not include_failed:
        episodes = [e for e in episodes if e.success]
    return episodes


# ---- training views and statistics ----

def episode_arrays(episode: Episode) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame observation and action arrays for policy training.

    Observations come from each frame's ``extras["obs"]``.
    """
    obs_rows, act_rows = [], []
    for i, frame in enumerate(episode.frames):
        obs = frame.extras.get("obs")
        if obs is None:
            raise FormatError("frame has no extras['obs']", record_index=i + 1)
        obs_rows.append([float(v) for v in obs])
        act_rows.append(list(frame.action))
    return np.asarray(obs_rows, dtype=np.float64), np.asarray(
        act_rows, dtype=np.float64)


@dataclasses.dataclass(frozen=True)
class DatasetStats:
    count: int
    mean_duration: float
    std_duration: float  # population standard deviation
    total_duration: float
    histogram: tuple  # (bin_lo, bin_hi, count) triples, 2 s bins

    def to_document(self) -> dict:
        return {
            "count": self.count,
            "mean_duration": self.mean_duration,
            "std_duration": self.std_duration,
            "total_duration": self.total_duration,
            "histogram": [list(b) for b in self.histogram],
        }


HIST_BIN_WIDTH = 2.0


def dataset_stats(episodes: Iterable[Episode]) -> DatasetStats:
    durations = [e.duration for e in episodes]
    if not durations:
        raise EmptyDataset("no episodes to summarize")
    n = len(durations)
    mean = math.fsum(durations) / n
    var = math.fsum((d - mean) ** 2 for d in durations) / n
    n_bins = int(max(durations) // HIST_BIN_WIDTH) + 1
    counts = [0] * n_bins
    for d in durations:
        counts[int(d // HIST_BIN_WIDTH)] += 1
    hist = tuple((i * HIST_BIN_WIDTH, (i + 1) * HIST_BIN_WIDTH, c)
                 for i, c in enumerate(counts))
    return DatasetStats(
        count=n,
        mean_duration=mean,
        std_duration=math.sqrt(var),
        total_duration=math.fsum(durations),
        histogram=hist,
    )
