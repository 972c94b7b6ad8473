"""Run record: ordered trace events, per-flow deliveries, summary, export.

The JSON-lines export uses a fixed field order so that identical runs
serialize byte-identically; the hash of the export is the determinism
fingerprint.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import UnknownFlow

SCHEMA_VERSION = 1

EVENT_KINDS = ("Arrival", "Departure", "TimerExpiry", "Directive", "Drop",
               "StateTransition")


@dataclass(slots=True)
class TraceEvent:
    time: float
    seq: int
    kind: str
    location: str
    subject: str
    fields: dict


@dataclass(slots=True)
class Delivery:
    time: float
    flow_id: str
    payload_bytes: int
    created_at: float
    hop_log: tuple[str, ...]


@dataclass(slots=True)
class ControlDelivery:
    time: float
    kind: str
    association: str
    hop_log: tuple[str, ...]


@dataclass
class Trace:
    mode: str
    seed: int
    flow_ids: tuple[str, ...]
    events: list[TraceEvent] = field(default_factory=list)
    deliveries: list[Delivery] = field(default_factory=list)
    control_deliveries: list[ControlDelivery] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    _seq: int = 0

    def emit(self, time: float, kind: str, location: str, subject: str,
             **fields) -> TraceEvent:
        ev = TraceEvent(time=time, seq=self._seq, kind=kind, location=location,
                        subject=subject, fields=fields)
        self._seq += 1
        self.events.append(ev)
        return ev

    def transitions(self, entity: str | None = None) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == "StateTransition"
                and (entity is None or e.location == entity)]

    # -- export -------------------------------------------------------------

    def to_jsonl_lines(self):
        yield json.dumps({"schema_version": SCHEMA_VERSION, "record": "header",
                          "mode": self.mode, "seed": self.seed})
        for e in self.events:
            rec = {"time": round(e.time, 12), "seq": e.seq, "kind": e.kind,
                   "location": e.location, "subject": e.subject}
            for k in sorted(e.fields):
                rec[k] = e.fields[k]
            yield json.dumps(rec)

    def to_jsonl(self) -> str:
        return "\n".join(self.to_jsonl_lines()) + "\n"

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for line in self.to_jsonl_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


def measure_throughput(trace: Trace, flow_id: str,
                       window: tuple[float, float]) -> float:
    """Goodput: delivered payload bits inside the window over its width."""
    t0, t1 = window
    if t1 <= t0:
        raise ValueError(f"window must satisfy t1 > t0, got {window}")
    if flow_id not in trace.flow_ids:
        raise UnknownFlow(flow_id)
    bits = sum(d.payload_bytes * 8 for d in trace.deliveries
               if d.flow_id == flow_id and t0 <= d.time < t1)
    return bits / (t1 - t0)
