"""Append-only scheduler trace with JSON-lines export."""

import csv
import json
from dataclasses import dataclass, field

EVENT_KINDS = frozenset({
    "task_submitted", "task_started", "task_finished", "task_cancelled",
    "task_retried", "object_sealed", "object_spilled", "object_restored",
    "object_evicted", "object_transferred", "node_failed", "node_restarted",
})


@dataclass
class TraceEvent:
    time: float
    kind: str
    subject: int
    node: int | None = None
    attempt: int | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"time": self.time, "kind": self.kind, "subject": self.subject,
                "node": self.node, "attempt": self.attempt, "detail": self.detail}


class SchedulerTrace:
    def __init__(self):
        self.events = []

    def emit(self, time, kind, subject, node=None, attempt=None, **detail):
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind {kind!r}")
        self.events.append(TraceEvent(time, kind, subject, node, attempt, detail))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, *kinds):
        return [e for e in self.events if e.kind in kinds]

    def count(self, kind, **match):
        n = 0
        for e in self.events:
            if e.kind == kind and all(e.detail.get(k) == v for k, v in match.items()):
                n += 1
        return n

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for e in self.events:
                fh.write(json.dumps(e.to_dict(), default=str) + "\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "kind", "subject", "node", "attempt", "detail"])
            for e in self.events:
                w.writerow([e.time, e.kind, e.subject, e.node, e.attempt,
                            json.dumps(e.detail, default=str)])

    @staticmethod
    def read_jsonl(path):
        with open(path) as fh:
            return [TraceEvent(**json.loads(line)) for line in fh if line.strip()]
