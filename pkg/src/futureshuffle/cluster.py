"""Simulated multi-node cluster: nodes, executor slots and failure injection."""

import copy
import logging
import shutil
import tempfile
from collections import deque
from dataclasses import asdict, dataclass, field

from .runtime.core import Runtime
from .sim import EventLoop
from .store.config import StoreConfig
from .store.store import ObjectStore
from .trace import SchedulerTrace

log = logging.getLogger(__name__)

ACTIONS = ("kill_node", "kill_executor", "restart_node")


@dataclass
class Executor:
    slot: int
    task: object = None


@dataclass(eq=False)
class Node:
    node_id: int
    slots: int
    alive: bool = True
    executors: list = field(default_factory=list)
    queue: deque = field(default_factory=deque)

    def __post_init__(self):
        self.executors = [Executor(i) for i in range(self.slots)]


@dataclass
class FailureEvent:
    """One trigger/action pair. Exactly one of ``at_time`` / ``after_k_tasks`` is set."""

    action: str
    node: int
    slot: int | None = None
    at_time: float | None = None
    after_k_tasks: int | None = None
    fired: bool = False

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown failure action {self.action!r}")
        if (self.at_time is None) == (self.after_k_tasks is None):
            raise ValueError("set exactly one of at_time / after_k_tasks")
        if self.action == "kill_executor" and self.slot is None:
            raise ValueError("kill_executor needs a slot")


@dataclass
class FailurePlan:
    events: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d):
        events = d.get("events", d) if isinstance(d, dict) else d
        return cls([FailureEvent(**{k: v for k, v in e.items() if k != "fired"}) for e in events])

    def to_dict(self):
        return {"events": [{k: v for k, v in asdict(e).items() if k != "fired" and v is not None}
                           for e in self.events]}


class Cluster:
    """Owns the event loop, the object store, the nodes and the runtime."""

    def __init__(self, nodes, slots_per_node, store_config=None, *, cost=None, seed=0,
                 max_retries=3, failure_plan=None, record_checksums=True):
        if nodes < 1 or slots_per_node < 1:
            raise ValueError("nodes and slots_per_node must be >= 1")
        self.store_config = store_config or StoreConfig()
        self._own_spill = self.store_config.spill_dir is None
        self.spill_root = (tempfile.mkdtemp(prefix="futureshuffle-")
                           if self._own_spill else self.store_config.spill_dir)
        self.loop = EventLoop()
        self.trace = SchedulerTrace()
        self.store = ObjectStore(self.store_config, self.loop, self.trace, self.spill_root)
        self.nodes = [Node(i, slots_per_node) for i in range(nodes)]
        for n in self.nodes:
            self.store.add_node(n.node_id)
        self.runtime = Runtime(self, cost=cost, max_retries=max_retries, seed=seed,
                               record_checksums=record_checksums)
        self.failure_plan = copy.deepcopy(failure_plan) if failure_plan else FailurePlan()
        self._armed = []
        for ev in self.failure_plan.events:
            if ev.at_time is not None:
                self.loop.at(ev.at_time, self._fire, ev)

    @property
    def capacity(self):
        return sum(n.slots for n in self.nodes if n.alive)

    def _fire(self, ev):
        if ev.fired:
            return
        ev.fired = True
        log.info("failure plan: %s node=%s slot=%s at t=%.4f", ev.action, ev.node, ev.slot,
                 self.loop.now)
        if ev.action == "kill_node":
            self.kill_node(ev.node)
        elif ev.action == "kill_executor":
            self.kill_executor(ev.node, ev.slot)
        else:
            self.restart_node(ev.node)

    def _on_task_finished(self, count):
        for ev in self.failure_plan.events:
            if ev.after_k_tasks is not None and count >= ev.after_k_tasks and ev not in self._armed:
                self._armed.append(ev)
                self.loop.at(self.loop.now, self._fire, ev)

    def kill_node(self, node_id):
        with self.runtime._lock:
            node = self.nodes[node_id]
            if not node.alive:
                return
            node.alive = False
            self.trace.emit(self.loop.now, "node_failed", node_id, node_id)
            self.runtime._node_lost(node)

    def kill_executor(self, node_id, slot):
        """Kill one executor process. The node's store survives."""
        with self.runtime._lock:
            node = self.nodes[node_id]
            if not node.alive:
                return False
            return self.runtime._executor_lost(node, slot)

    def restart_node(self, node_id):
        """Bring a node back with a fresh, empty store."""
        with self.runtime._lock:
            old = self.nodes[node_id]
            if old.alive:
                self.kill_node(node_id)
            node = Node(node_id, old.slots)
            self.nodes[node_id] = node
            self.store.add_node(node_id)
            self.trace.emit(self.loop.now, "node_restarted", node_id, node_id)

    def metrics(self):
        return self.runtime.metrics()

    def shutdown(self):
        if self._own_spill:
            shutil.rmtree(self.spill_root, ignore_errors=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


def start_cluster(nodes, slots_per_node, store_config=None, **kw):
    return Cluster(nodes, slots_per_node, store_config, **kw)
