"""Append-only JSONL transcript of backend calls and system events.

Every prompt/response exchange and notable orchestration event (tool
equips, scene commits, training kicks) lands here as one JSON object per
line, so a session can be audited or re-parsed offline. The clock is
injectable for reproducible tests.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from .errors import FormatError


class Transcript:
    def __init__(self, path: str | Path | None = None, clock=None):
        self._path = Path(path) if path is not None else None
        self._clock = clock if clock is not None else time.time
        self.entries: list[dict] = []
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def path(self) -> Path | None:
        return self._path

    def record(self, kind: str, **fields) -> dict:
        entry = {"t": round(float(self._clock()), 6), "kind": kind}
        entry.update(fields)
        self.entries.append(entry)
        if self._path is not None:
            with open(self._path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, sort_keys=True) + "\n")
        return entry

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.entries if e.get("kind") == kind]


def load_transcript(path: str | Path) -> list[dict]:
    entries = []
    text = Path(path).read_text(encoding="utf-8")
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"transcript line is not valid JSON: {e.msg}",
                              record_index=i) from e
        if not isinstance(entry, dict) or "kind" not in entry:
            raise FormatError("transcript entry must be an object with a"
                              " 'kind' field", record_index=i)
        entries.append(entry)
    return entries
