"""The distributed-futures engine.

Tasks are plain Python callables registered by name. ``submit`` returns
``ObjectRef`` handles immediately; ``get`` and ``wait`` drive the simulated
cluster until the requested objects are sealed. Everything runs on one
event loop, so a run is a pure function of its inputs, seed and failure plan.
"""

import dataclasses
import itertools
import logging
import math
import pickle
import threading
from collections import Counter, defaultdict

from ..checksum import fnv1a64
from ..errors import (DeadlockError, DeadReference, DoubleDrop, GetTimeoutError,
                      InlineArgumentTooLarge, NonReconstructibleRoot, ReconstructionFailed,
                      TaskCancelledError, TaskFailedError, UnknownFunction)
from ..store.store import PRIO_DEMAND, PRIO_PREFETCH
from .types import (INLINE_LIMIT, CostModel, LineageRecord, ObjectRef, RemoteFunction,
                    TaskContext, TaskSpec, WaitResult, is_stall)

log = logging.getLogger(__name__)

_PUT_NAMESPACE = 1 << 127


def encode(value):
    if isinstance(value, bytes):
        return value, "raw"
    if isinstance(value, (bytearray, memoryview)):
        return bytes(value), "raw"
    return pickle.dumps(value, protocol=pickle.HIGHEST_PROTOCOL), "pickle"


def decode(payload, encoding):
    return payload if encoding == "raw" else pickle.loads(payload)


class _Task:
    """Scheduler-side state of one attempt of a lineage record."""

    def __init__(self, record, fn):
        self.record = record
        self.fn = fn
        self.state = "new"        # waiting, queued, fetching, running, sealing, done
        self.node = None
        self.executor = None
        self.deps = set()
        self.token = 0
        self.pinned = []
        self.pending_fetch = set()
        self.alloc = None
        self.finish_event = None
        self.outputs = None
        self.error = None
        self.started_at = None
        self.finished_at = None
        self.prefetch_issued = False

    @property
    def spec(self):
        return self.record.spec

    @property
    def task_id(self):
        return self.record.spec.task_id

    def ref_args(self):
        return [a for a in self.record.spec.args if isinstance(a, ObjectRef)]


class Runtime:
    def __init__(self, cluster, cost=None, max_retries=3, seed=0, record_checksums=True):
        self.cluster = cluster
        self.loop = cluster.loop
        self.store = cluster.store
        self.trace = cluster.trace
        self.cost = cost or CostModel()
        self.max_retries = max_retries
        self.seed = seed
        self.record_checksums = record_checksums
        self.counters = Counter()
        self.slowdowns = []
        self._lock = threading.RLock()
        self._functions = {}
        self._lineage = {}
        self._tasks = {}
        self._ids = itertools.count(1)
        self._waiting_on = defaultdict(list)
        self._blocks = set()
        self._reducer_inputs = set()

    # registry

    def register(self, name, fn, *, num_returns=1, deterministic=True, cost=None,
                 output_to_disk=False):
        with self._lock:
            self._functions[name] = RemoteFunction(name, fn, num_returns, deterministic,
                                                   cost, output_to_disk)

    def is_registered(self, name):
        return name in self._functions

    # clock

    @property
    def now(self):
        return self.loop.now

    @property
    def num_nodes(self):
        return len(self.cluster.nodes)

    def alive_nodes(self):
        return [n.node_id for n in self.cluster.nodes if n.alive]

    def sleep(self, dt):
        """Advance driver time by ``dt`` simulated seconds."""
        with self._lock:
            target = self.loop.now + dt
            while True:
                t = self.loop.next_time()
                if t is None or t > target:
                    break
                self.loop.step()
            self.loop.advance_to(target)

    # submission

    def _check_live(self, ref):
        e = self.store.entries.get(ref.object_id)
        if ref._dropped or e is None or e.refcount <= 0:
            raise DeadReference(repr(ref))
        return e

    def submit(self, function_id, *args, num_returns=None, placement=None,
               deterministic=None, labels=None):
        """Submit a task. Returns ``num_returns`` refs without blocking."""
        with self._lock:
            fn = self._functions.get(function_id)
            if fn is None:
                raise UnknownFunction(function_id)
            for a in args:
                if isinstance(a, ObjectRef):
                    self._check_live(a)
                else:
                    payload, _ = encode(a)
                    if len(payload) > INLINE_LIMIT:
                        raise InlineArgumentTooLarge(
                            f"inline argument of {len(payload)} bytes; put() it instead")
            n = fn.num_returns if num_returns is None else num_returns
            if n < 1:
                raise ValueError("num_returns must be >= 1")
            task_id = next(self._ids)
            spec = TaskSpec(task_id, function_id, tuple(args), n, placement,
                            fn.deterministic if deterministic is None else deterministic,
                            0, dict(labels or {}))
            oids = [(task_id << 32) | i for i in range(n)]
            record = LineageRecord(oids, spec)
            self._lineage[task_id] = record
            refs = []
            for oid in oids:
                self.store.create_entry(oid, task_id, refcount=1)
                refs.append(ObjectRef(oid, task_id, self))
            for a in spec.args:
                if isinstance(a, ObjectRef):
                    self.store.entries[a.object_id].refcount += 1
                    if spec.labels.get("role") == "reduce":
                        self._reducer_inputs.add(a.object_id)
            self.trace.emit(self.now, "task_submitted", task_id, placement, 0,
                            function=function_id, **spec.labels)
            self._activate(_Task(record, fn))
            return refs

    def call(self, function_id, *args, **kw):
        """``submit`` for single-return functions."""
        refs = self.submit(function_id, *args, **kw)
        if len(refs) != 1:
            raise ValueError("call() needs num_returns == 1")
        return refs[0]

    def put(self, value, node=0):
        """Store a driver value and wait until it is sealed.

        Such objects have no lineage, so losing every copy is unrecoverable.
        """
        with self._lock:
            payload, enc = encode(value)
            if not payload:
                raise ValueError("put() of an empty value")
            if not self.cluster.nodes[node].alive:
                raise ValueError(f"node {node} is dead")
            oid = _PUT_NAMESPACE | next(self._ids) << 32
            e = self.store.create_entry(oid, None, refcount=1)
            e.encoding = enc
            self.store.put(node, oid, payload, lambda: self._seal(oid, node, payload, enc))
            self._run_until(lambda: e.sealed)
            return ObjectRef(oid, None, self)

    def _activate(self, task):
        self._tasks[task.task_id] = task
        task.state = "waiting"
        task.deps = set()
        for a in task.ref_args():
            e = self.store.entries[a.object_id]
            if e.error is not None:
                self._fail_task(task, e.error)
                return
            if e.sealed and e.available:
                continue
            task.deps.add(a.object_id)
            self._waiting_on[a.object_id].append(task)
            if e.sealed and not e.producing:
                self._reconstruct(a.object_id)
        if not task.deps:
            self._place(task)

    def _on_available(self, oid):
        e = self.store.entries[oid]
        for task in self._waiting_on.pop(oid, ()):
            if task.state != "waiting" or oid not in task.deps:
                continue
            if e.error is not None:
                self._fail_task(task, e.error)
                continue
            task.deps.discard(oid)
            if not task.deps:
                self._place(task)

    # placement and dispatch

    def _load(self, node):
        return len(node.queue) + sum(1 for ex in node.executors if ex.task is not None)

    def _least_loaded(self, exclude=()):
        alive = [n for n in self.cluster.nodes if n.alive and n.node_id not in exclude]
        if not alive:
            alive = [n for n in self.cluster.nodes if n.alive]
        if not alive:
            raise DeadlockError("no live nodes")
        return min(alive, key=lambda n: (self._load(n), n.node_id))

    def _choose_node(self, task):
        nodes = self.cluster.nodes
        hint = task.spec.placement
        if hint is not None:
            if 0 <= hint < len(nodes) and nodes[hint].alive:
                return nodes[hint]
            return self._least_loaded()
        local = Counter()
        for a in task.ref_args():
            e = self.store.entries[a.object_id]
            for n in e.node_locations:
                if nodes[n].alive:
                    local[n] += e.size or 0
        if local:
            best = max(local.values())
            cands = [nodes[n] for n, b in local.items() if b == best]
            return min(cands, key=lambda n: (self._load(n), n.node_id))
        return self._least_loaded()

    def _place(self, task, node=None, front=False):
        node = node or self._choose_node(task)
        task.node = node.node_id
        task.state = "queued"
        task.prefetch_issued = False
        if front:
            node.queue.appendleft(task)
        else:
            node.queue.append(task)
        self._dispatch(node)
        self._prefetch(node)

    def _dispatch(self, node):
        while node.alive and node.queue:
            ex = next((ex for ex in node.executors if ex.task is None), None)
            if ex is None:
                return
            task = node.queue.popleft()
            ex.task = task
            task.executor = ex
            task.state = "fetching"
            self._begin_fetch(task)

    def _prefetch(self, node):
        cfg = self.store.config
        if not cfg.prefetch_enabled or not node.alive:
            return
        ns = self.store.nodes[node.node_id]
        for task in list(node.queue)[:cfg.prefetch_depth]:
            if task.prefetch_issued:
                continue
            task.prefetch_issued = True
            tag = task.spec.labels.get("role")
            for a in dict.fromkeys(task.ref_args()):
                e = self.store.entries[a.object_id]
                if node.node_id in e.memory or a.object_id in ns.inflight or not e.available:
                    continue
                self.store.request(node.node_id, e.size, PRIO_PREFETCH,
                                   self._prefetch_granted(node.node_id, a.object_id, tag))

    def _prefetch_granted(self, node_id, oid, tag):
        def granted(mode):
            e = self.store.entries[oid]
            if e.refcount <= 0:
                self.store.release(node_id, e.size)
                return
            ns = self.store.nodes[node_id]

            def landed(ok):
                if ok and oid in ns.data:
                    ns.prefetched.add(oid)
            self.store.fetch(node_id, oid, landed, tag=tag)
        return granted

    def _begin_fetch(self, task):
        nid = task.node
        ns = self.store.nodes[nid]
        need = []
        attach = []
        missing = []
        for oid in dict.fromkeys(a.object_id for a in task.ref_args()):
            e = self.store.entries[oid]
            if nid in e.memory:
                self.store.pin(nid, oid)
                self.store.touch(nid, oid)
                ns.prefetched.discard(oid)
                task.pinned.append(oid)
            elif oid in ns.inflight:
                attach.append(oid)
            elif e.available:
                need.append(oid)
            else:
                missing.append(oid)
        if missing:
            self._stall(task, missing)
            return
        if not need and not attach:
            self._start(task)
            return
        token = task.token
        task.pending_fetch = set(need) | set(attach)
        tag = task.spec.labels.get("role")
        for oid in attach:
            ns.inflight[oid][0].append(self._arg_arrived(task, token, oid))
        if need:
            total = sum(self.store.entries[o].size for o in need)

            def granted(mode):
                task.alloc = None
                if task.token != token:
                    self.store.release(nid, total)
                    return
                for oid in need:
                    self.store.fetch(nid, oid, self._arg_arrived(task, token, oid), tag=tag)
            task.alloc = self.store.request(nid, total, PRIO_DEMAND, granted)

    def _arg_arrived(self, task, token, oid):
        def cb(ok):
            if task.token != token:
                return
            if not ok:
                self._stall(task, [oid])
                return
            self.store.pin(task.node, oid)
            self.store.nodes[task.node].prefetched.discard(oid)
            task.pinned.append(oid)
            task.pending_fetch.discard(oid)
            if not task.pending_fetch:
                self._start(task)
        return cb

    def _release_slot(self, task, running=False):
        """Undo dispatch-time state: pins, reservations, executor."""
        node = self.cluster.nodes[task.node] if task.node is not None else None
        alive = node is not None and node.alive and self.store.nodes[task.node].alive
        if task.alloc is not None:
            task.alloc.cancel()
            task.alloc = None
        if task.finish_event is not None:
            task.finish_event.cancel()
            task.finish_event = None
        if alive:
            for oid in task.pinned:
                self.store.unpin(task.node, oid)
            if running:
                self.store.set_running(task.node, -1)
        task.pinned = []
        task.pending_fetch = set()
        if task.executor is not None:
            task.executor.task = None
            task.executor = None
        task.token += 1

    def _stall(self, task, missing):
        """An argument vanished while fetching: give the slot back and wait for it."""
        node = self.cluster.nodes[task.node]
        self._release_slot(task)
        task.state = "waiting"
        task.node = None
        for oid in missing:
            task.deps.add(oid)
            self._waiting_on[oid].append(task)
        for oid in missing:
            self._reconstruct(oid)
        self._dispatch(node)

    # execution

    def _start(self, task):
        nid = task.node
        ns = self.store.nodes[nid]
        spec = task.spec
        task.state = "running"
        task.started_at = self.now
        self.store.set_running(nid, +1)
        rec = task.record
        rec.status = "running"
        args = []
        in_bytes = 0
        for a in spec.args:
            if isinstance(a, ObjectRef):
                payload = ns.data[a.object_id]
                e = self.store.entries[a.object_id]
                in_bytes += len(payload)
                args.append(decode(payload, e.encoding))
            else:
                args.append(a)
        self.trace.emit(self.now, "task_started", spec.task_id, nid, spec.attempt,
                        input_bytes=in_bytes, slot=task.executor.slot, **spec.labels)
        ctx = TaskContext(spec, nid, self.now, self.seed)
        self._ctx = ctx
        outputs = None
        try:
            result = task.fn.fn(*args)
            if spec.num_returns == 1:
                result = [result]
            else:
                result = list(result)
                if len(result) != spec.num_returns:
                    raise ValueError(f"returned {len(result)} values, expected {spec.num_returns}")
            outputs = [encode(v) for v in result]
        except Exception as exc:  # application error, not retried
            task.error = TaskFailedError(spec.task_id, spec.function_id, exc)
        finally:
            self._ctx = None
        task.outputs = outputs
        out_bytes = sum(len(p) for p, _ in outputs) if outputs else 0
        duration = task.fn.duration(self.cost, in_bytes, out_bytes)
        for slow in self.slowdowns:
            duration *= slow(spec)
        if is_stall(duration):
            return
        task.finish_event = self.loop.after(duration, self._finish, task, task.token)

    def current_context(self):
        """Context of the task whose body is executing, or None on the driver."""
        return getattr(self, "_ctx", None)

    def _finish(self, task, token):
        if task.token != token:
            return
        task.finish_event = None
        task.state = "sealing"
        spec = task.spec
        self.trace.emit(self.now, "task_finished", spec.task_id, task.node, spec.attempt,
                        **spec.labels)
        if task.error is not None:
            self._complete(task, token, [])
            return
        items = []
        for oid, (payload, enc) in zip(task.record.produced_objects, task.outputs):
            e = self.store.entries[oid]
            if e.sealed and e.checksum is not None:
                if fnv1a64(payload) != e.checksum:
                    self.counters["replay_mismatches"] += 1
                    log.error("replay of task %d produced different bytes for %x", spec.task_id, oid)
                self.counters["replays_verified"] += 1
            if e.available or e.refcount <= 0:
                continue
            e.encoding = enc
            items.append((oid, payload))
        self.store.store_outputs(task.node, items, task.fn.output_to_disk,
                                 lambda: self._complete(task, token, items))

    def _complete(self, task, token, items):
        if task.token != token:
            return
        nid = task.node
        spec = task.spec
        task.outputs = None
        for oid, payload in items:
            self._seal(oid, nid, payload, self.store.entries[oid].encoding, task)
        self._release_slot(task, running=True)
        task.state = "done"
        task.finished_at = self.now
        self._tasks.pop(spec.task_id, None)
        for oid in task.record.produced_objects:
            e = self.store.entries[oid]
            if not e.sealed and task.error is None:
                e.sealed = True          # nobody held a ref; nothing to store
                e.sealed_at = self.now
            if task.error is None:
                e.producing = False
        self._release_args(task.record)
        if task.error is not None:
            task.record.status = "failed"
            self._error_outputs(task.record, task.error)
        else:
            task.record.status = "finished"
            for oid in task.record.produced_objects:
                self._on_available(oid)
        self.counters["tasks_finished"] += 1
        self.cluster._on_task_finished(self.counters["tasks_finished"])
        node = self.cluster.nodes[nid]
        self._dispatch(node)
        self._prefetch(node)

    def _seal(self, oid, node, payload, enc, task=None):
        e = self.store.entries[oid]
        first = not e.sealed
        e.size = len(payload)
        e.encoding = enc
        e.sealed = True
        e.producing = False
        e.sealed_at = self.now
        if first and self.record_checksums and e.checksum is None:
            e.checksum = fnv1a64(payload)
        self.store.metrics[node].objects_created += 1
        role = task.spec.labels.get("role") if task is not None else None
        if first and role in ("map", "merge"):
            self._blocks.add(oid)
        self.trace.emit(self.now, "object_sealed", oid, node, bytes=len(payload), role=role)
        if e.refcount <= 0:
            self.store.free(oid)
        if task is None:
            self._on_available(oid)

    def _release_args(self, record):
        for a in record.spec.args:
            if isinstance(a, ObjectRef):
                self._decref(a.object_id)

    def _error_outputs(self, record, error):
        for oid in record.produced_objects:
            e = self.store.entries[oid]
            e.error = error
            e.producing = False
            e.sealed_at = self.now
            self._on_available(oid)

    def _fail_task(self, task, error):
        """Fail without running, e.g. because an argument errored."""
        if task.state in ("queued",):
            self.cluster.nodes[task.node].queue.remove(task)
        task.state = "done"
        task.token += 1
        self._tasks.pop(task.task_id, None)
        task.record.status = "failed"
        self._release_args(task.record)
        self._error_outputs(task.record, error)

    # reference counting

    def _decref(self, oid):
        e = self.store.entries[oid]
        e.refcount -= 1
        if e.refcount == 0:
            self.store.free(oid)

    def drop_ref(self, ref):
        with self._lock:
            if ref._dropped:
                raise DoubleDrop(repr(ref))
            e = self.store.entries.get(ref.object_id)
            if e is None or e.refcount <= 0:
                raise DeadReference(repr(ref))
            ref._dropped = True
            self._decref(ref.object_id)

    def drop_refs(self, refs):
        for r in refs:
            self.drop_ref(r)

    def refcount(self, ref):
        return self.store.entries[ref.object_id].refcount

    # blocking calls

    def _run_until(self, pred, timeout=None):
        deadline = math.inf if timeout is None else self.loop.now + timeout
        while not pred():
            t = self.loop.next_time()
            if t is None or t > deadline:
                if math.isinf(deadline):
                    raise DeadlockError("driver is blocked and no event is pending")
                self.loop.advance_to(deadline)
                return pred()
            self.loop.step()
        return True

    def _resolve(self, oid):
        """True once ``oid`` has a readable copy or an error, starting replay if needed."""
        e = self.store.entries[oid]
        if e.error is not None:
            return True
        if e.sealed and e.available:
            return True
        if e.sealed and not e.producing:
            self._reconstruct(oid)
            return e.error is not None
        return False

    def get(self, ref, timeout=None):
        """Block until the object is sealed and return its value."""
        with self._lock:
            if ref._dropped:
                raise DeadReference(repr(ref))
            e = self._check_live(ref)
            deadline = None if timeout is None else self.now + timeout
            while True:
                left = None if deadline is None else max(0.0, deadline - self.now)
                if not self._run_until(lambda: self._resolve(ref.object_id), left):
                    raise GetTimeoutError(repr(ref))
                if e.error is not None:
                    raise e.error
                payload = self.store.read(ref.object_id)
                if payload is not None:
                    return decode(payload, e.encoding)

    def _is_ready(self, oid):
        e = self.store.entries[oid]
        return e.error is not None or e.sealed

    def wait(self, refs, num_ready=1, timeout=None):
        """Block until ``num_ready`` of ``refs`` are sealed, without moving values."""
        with self._lock:
            refs = list(refs)
            if not refs:
                raise ValueError("wait() needs at least one ref")
            if not 1 <= num_ready <= len(refs):
                raise ValueError("num_ready out of range")
            for r in refs:
                self._check_live(r)
            ok = self._run_until(
                lambda: sum(self._is_ready(r.object_id) for r in refs) >= num_ready, timeout)
            done = [(self.store.entries[r.object_id].sealed_at, i)
                    for i, r in enumerate(refs) if self._is_ready(r.object_id)]
            done.sort()
            chosen = {i for _, i in done[:num_ready]}
            ready = [refs[i] for _, i in done[:num_ready]]
            pending = [r for i, r in enumerate(refs) if i not in chosen]
            return WaitResult(ready, pending, timed_out=not ok)

    # cancellation

    def cancel(self, ref):
        with self._lock:
            e = self.store.entries.get(ref.object_id)
            rec = self._lineage.get(e.creator_task) if e is not None else None
            if rec is None:
                return False
            if rec.status == "cancelled":
                return True
            if rec.status in ("finished", "failed"):
                return False
            task = self._tasks.get(rec.spec.task_id)
            if task is None or task.state in ("sealing", "done"):
                return False
            self._abort(task)
            rec.status = "cancelled"
            self.trace.emit(self.now, "task_cancelled", rec.spec.task_id, task.node,
                            rec.spec.attempt, **rec.spec.labels)
            self._tasks.pop(rec.spec.task_id, None)
            self._release_args(rec)
            err = TaskCancelledError(f"task {rec.spec.task_id} was cancelled")
            self._error_outputs(rec, err)
            return True

    def _abort(self, task):
        node = self.cluster.nodes[task.node] if task.node is not None else None
        if task.state == "queued":
            node.queue.remove(task)
        elif task.state in ("fetching", "running"):
            self._release_slot(task, running=task.state == "running")
        task.state = "done"
        task.token += 1
        if node is not None and node.alive:
            self._dispatch(node)

    # failures and lineage

    def _retry(self, task, reason, node=None):
        """Resubmit a failed attempt of the same lineage record."""
        rec = task.record
        old = rec.spec
        if old.attempt >= self.max_retries:
            self._tasks.pop(old.task_id, None)
            task.state = "done"
            rec.status = "failed"
            self._release_args(rec)
            self._error_outputs(rec, ReconstructionFailed(
                f"task {old.task_id} failed {old.attempt + 1} times"))
            return
        rec.spec = dataclasses.replace(old, attempt=old.attempt + 1)
        rec.status = "pending"
        self.counters["task_retries"] += 1
        self.trace.emit(self.now, "task_retried", old.task_id, node.node_id if node else None,
                        rec.spec.attempt, reason=reason, **old.labels)
        fresh = _Task(rec, task.fn)
        fresh.token = task.token + 1
        if node is not None and node.alive:
            self._tasks[old.task_id] = fresh
            fresh.state = "waiting"
            self._place(fresh, node=node, front=True)
        else:
            self._activate(fresh)

    def _reconstruct(self, oid):
        e = self.store.entries[oid]
        if e.available or e.producing or e.error is not None:
            return
        rec = self._lineage.get(e.creator_task)
        if rec is None:
            e.error = NonReconstructibleRoot(f"object {oid:x} was put() by the driver")
            self._on_available(oid)
            return
        if rec.status in ("pending", "running"):
            return
        if not rec.spec.deterministic or rec.status == "cancelled":
            e.error = ReconstructionFailed(f"task {rec.spec.task_id} cannot be replayed")
            self._on_available(oid)
            return
        if rec.spec.attempt >= self.max_retries:
            e.error = ReconstructionFailed(f"task {rec.spec.task_id} exhausted its retries")
            e.producing = False
            self._on_available(oid)
            return
        old = rec.spec
        rec.spec = dataclasses.replace(old, attempt=old.attempt + 1)
        rec.status = "pending"
        self.counters["task_retries"] += 1
        self.counters["reconstructions"] += 1
        self.trace.emit(self.now, "task_retried", old.task_id, None, rec.spec.attempt,
                        reason="reconstruction", object=oid, **old.labels)
        for out in rec.produced_objects:
            oe = self.store.entries[out]
            if not oe.available:
                oe.producing = True
        for a in rec.spec.args:
            if isinstance(a, ObjectRef):
                self.store.entries[a.object_id].refcount += 1
        self._activate(_Task(rec, self._functions[old.function_id]))

    def _node_lost(self, node):
        """Fail everything that was running on ``node`` and re-home its queue."""
        self.store.wipe_node(node.node_id)
        queued = list(node.queue)
        node.queue.clear()
        for task in queued:
            task.state = "waiting"
            task.node = None
            self._activate(task)
        for ex in node.executors:
            task = ex.task
            if task is None:
                continue
            self._release_slot(task)
            self._retry(task, "node_failure")

    def _executor_lost(self, node, slot):
        ex = node.executors[slot]
        task = ex.task
        if task is None or task.state not in ("fetching", "running"):
            return False
        self._release_slot(task, running=task.state == "running")
        self._retry(task, "executor_failure", node=node)
        return True

    # introspection

    def lineage(self, ref):
        e = self.store.entries[ref.object_id]
        return self._lineage.get(e.creator_task)

    def task_info(self, ref):
        """``(status, node, started_at)`` of the task producing ``ref``."""
        rec = self.lineage(ref)
        if rec is None:
            return "finished", None, None
        task = self._tasks.get(rec.spec.task_id)
        if task is None:
            return rec.status, None, None
        return task.state, task.node, task.started_at

    def object_state(self, ref):
        return self.store.entries[ref.object_id].state

    def object_size(self, ref):
        return self.store.entries[ref.object_id].size

    def locations(self, ref):
        return self.store.entries[ref.object_id].node_locations

    def metrics(self):
        io = self.store.total_metrics()
        out = io.to_dict()
        out.update({
            "task_retries": self.counters["task_retries"],
            "reconstructions": self.counters["reconstructions"],
            "tasks_finished": self.counters["tasks_finished"],
            "replay_mismatches": self.counters["replay_mismatches"],
            "blocks_created": len(self._blocks),
            "reducer_visible_blocks": len(self._reducer_inputs),
        })
        return out
