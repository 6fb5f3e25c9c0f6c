"""Line-delimited run traces.

A trace is a header record, one record per event and a closing ``end``
record carrying the event count, so a cut-off file is detected on read.
Traces hold no wall-clock values: rerunning a (scenario, seed) pair must
reproduce the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA = "tamper2d-trace"
VERSION = 1


class TraceError(ValueError):
    pass


class SchemaMismatch(TraceError):
    pass


class TruncationError(TraceError):
    pass


def _clean(v):
    """Make a value JSON-stable: numpy scalars and arrays become Python types."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "tolist"):
        return _clean(v.tolist())
    if isinstance(v, float):
        return float(v)
    return v


@dataclass
class Trace:
    header: dict
    events: list[dict] = field(default_factory=list)

    @classmethod
    def new(cls, **meta) -> "Trace":
        return cls({"schema": SCHEMA, "version": VERSION, **_clean(meta)})

    def emit(self, event: str, **data) -> dict:
        rec = {"i": len(self.events), "event": event, **_clean(data)}
        self.events.append(rec)
        return rec

    def of(self, event: str) -> list[dict]:
        return [e for e in self.events if e["event"] == event]

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in self.events]
        lines.append(json.dumps({"event": "end", "n_events": len(self.events)}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl())
        return path

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise TruncationError("empty trace")
        try:
            recs = [json.loads(ln) for ln in lines]
        except json.JSONDecodeError as e:
            raise TruncationError(f"unparseable record: {e}") from None
        head = recs[0]
        if head.get("schema") != SCHEMA or head.get("version") != VERSION:
            raise SchemaMismatch(f"expected {SCHEMA} v{VERSION}, got {head.get('schema')} v{head.get('version')}")
        tail = recs[-1]
        if tail.get("event") != "end":
            raise TruncationError("trace has no end record")
        events = recs[1:-1]
        if tail.get("n_events") != len(events):
            raise TruncationError(f"end record announces {tail.get('n_events')} events, found {len(events)}")
        return cls(head, events)

    @classmethod
    def read(cls, path) -> "Trace":
        return cls.from_jsonl(Path(path).read_text())
