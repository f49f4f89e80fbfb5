"""Value types shared by the runtime, the cluster and the shuffle library."""

import math
from dataclasses import dataclass, field

import numpy as np

INLINE_LIMIT = 1024


class ObjectRef:
    """Handle to an eventual immutable value. Each handle is dropped at most once."""

    __slots__ = ("object_id", "creator_task", "_runtime", "_dropped")

    def __init__(self, object_id, creator_task, runtime):
        self.object_id = object_id
        self.creator_task = creator_task
        self._runtime = runtime
        self._dropped = False

    @property
    def size_hint(self):
        e = self._runtime.store.entries.get(self.object_id)
        return None if e is None else e.size

    @property
    def dropped(self):
        return self._dropped

    def __eq__(self, other):
        return isinstance(other, ObjectRef) and other.object_id == self.object_id

    def __hash__(self):
        return hash(self.object_id)

    def __repr__(self):
        return f"ObjectRef({self.object_id:032x})"


@dataclass
class TaskSpec:
    task_id: int
    function_id: str
    args: tuple
    num_returns: int = 1
    placement: int | None = None
    deterministic: bool = True
    attempt: int = 0
    labels: dict = field(default_factory=dict)


@dataclass
class LineageRecord:
    produced_objects: list
    spec: TaskSpec
    status: str = "pending"   # pending, running, finished, failed, cancelled


class WaitResult(tuple):
    """``(ready, pending)`` pair that also carries ``timed_out``."""

    def __new__(cls, ready, pending, timed_out=False):
        self = super().__new__(cls, (ready, pending))
        self.timed_out = timed_out
        return self

    @property
    def ready(self):
        return self[0]

    @property
    def pending(self):
        return self[1]


@dataclass
class CostModel:
    """Simulated task duration: fixed overhead plus bytes touched over CPU bandwidth."""

    task_overhead: float = 1e-3
    cpu_bandwidth: float = 400e6

    def duration(self, in_bytes, out_bytes):
        return self.task_overhead + (in_bytes + out_bytes) / self.cpu_bandwidth


@dataclass
class RemoteFunction:
    name: str
    fn: object
    num_returns: int = 1
    deterministic: bool = True
    cost: object = None
    output_to_disk: bool = False

    def duration(self, model, in_bytes, out_bytes):
        if self.cost is None:
            return model.duration(in_bytes, out_bytes)
        if callable(self.cost):
            return float(self.cost(in_bytes, out_bytes))
        return float(self.cost)


class TaskContext:
    """What a running task can see about itself."""

    def __init__(self, spec, node, now, seed):
        self.task_id = spec.task_id
        self.attempt = spec.attempt
        self.labels = spec.labels
        self.node = node
        self.now = now
        self._seed = seed
        self._rng = None

    @property
    def rng(self):
        # seeded from the task id only, so every attempt draws the same numbers
        if self._rng is None:
            self._rng = np.random.default_rng([self._seed, self.task_id])
        return self._rng


def is_stall(duration):
    return math.isinf(duration)
