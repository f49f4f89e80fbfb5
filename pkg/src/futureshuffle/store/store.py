"""Object directory, per-node memory stores, spilling, restore and pull."""

import heapq
import itertools
import logging
import os
import shutil
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

from ..errors import NothingToSpill, ObjectTooLarge, SpillFileError
from ..sim import Lane
from .config import IoMetrics
from .spill import delete_spill_file, read_spilled, write_spill_file

log = logging.getLogger(__name__)

# allocation priorities, lower is served first
PRIO_RETURN = 0
PRIO_DEMAND = 1
PRIO_PREFETCH = 2


@dataclass(eq=False)
class ObjectEntry:
    """Directory record of one object: where its copies live and how big it is."""

    object_id: int
    creator_task: int | None
    refcount: int = 0
    size: int | None = None
    encoding: str = "raw"
    memory: set = field(default_factory=set)    # node ids holding an in-memory copy
    disk: dict = field(default_factory=dict)    # node id -> SpillAddress
    sealed: bool = False
    producing: bool = True
    error: BaseException | None = None
    checksum: int | None = None
    sealed_at: float | None = None

    @property
    def node_locations(self):
        return set(self.memory) | set(self.disk)

    @property
    def spill_address(self):
        if not self.disk:
            return None
        return self.disk[min(self.disk)]

    @property
    def available(self):
        return bool(self.memory or self.disk)

    @property
    def state(self):
        if self.error is not None:
            return "failed"
        if self.memory:
            return "in_memory"
        if self.disk:
            return "spilled"
        if not self.sealed or self.producing:
            return "pending"
        if self.refcount == 0:
            return "freed"
        return "lost"


class _AllocRequest:
    __slots__ = ("size", "prio", "callback", "cancelled")

    def __init__(self, size, prio, callback):
        self.size = size
        self.prio = prio
        self.callback = callback
        self.cancelled = False

    def cancel(self):
        self.cancelled = True


class NodeStore:
    """Memory and spill state of one node incarnation."""

    def __init__(self, node_id, incarnation, spill_dir, metrics):
        self.node_id = node_id
        self.incarnation = incarnation
        self.spill_dir = spill_dir
        self.metrics = metrics
        self.alive = True
        self.data = {}
        self.used = 0            # bytes held in memory plus granted reservations
        self.peak_used = 0
        self.pins = Counter()
        self.lru = OrderedDict()
        self.prefetched = set()
        self.files = {}
        self.io = Lane()
        self.net = Lane()
        self.queue = []
        self.inflight = {}
        self.running = 0
        os.makedirs(spill_dir, exist_ok=True)

    def memory_bytes(self):
        return sum(len(v) for v in self.data.values())


class ObjectStore:
    """Cluster-wide object directory plus one ``NodeStore`` per live node."""

    def __init__(self, config, loop, trace, spill_root):
        self.config = config
        self.loop = loop
        self.trace = trace
        self.spill_root = spill_root
        self.entries = {}
        self.nodes = {}
        self.metrics = {}
        self._incarnations = Counter()
        self._file_ids = itertools.count()
        self._seq = itertools.count()

    # node lifecycle

    def add_node(self, node_id):
        inc = self._incarnations[node_id]
        self._incarnations[node_id] += 1
        m = self.metrics.setdefault(node_id, IoMetrics())
        path = os.path.join(self.spill_root, f"node{node_id}-{inc}")
        self.nodes[node_id] = NodeStore(node_id, inc, path, m)
        return self.nodes[node_id]

    def wipe_node(self, node_id):
        """Machine loss: memory and spill files disappear. Returns affected object ids."""
        ns = self.nodes[node_id]
        ns.alive = False
        touched = set(ns.data)
        for oid in ns.data:
            self.entries[oid].memory.discard(node_id)
        for f in ns.files.values():
            for oid in f.live:
                e = self.entries.get(oid)
                if e is not None:
                    e.disk.pop(node_id, None)
                    touched.add(oid)
        ns.data.clear()
        ns.files.clear()
        ns.lru.clear()
        ns.queue.clear()
        ns.inflight.clear()
        ns.used = 0
        shutil.rmtree(ns.spill_dir, ignore_errors=True)
        return touched

    def total_metrics(self):
        return IoMetrics.total(self.metrics.values())

    # directory

    def create_entry(self, oid, creator, refcount):
        e = ObjectEntry(oid, creator, refcount=refcount)
        self.entries[oid] = e
        return e

    def _has_other_copy(self, e, node_id):
        return bool(e.disk) or any(n != node_id for n in e.memory)

    def touch(self, node_id, oid):
        ns = self.nodes[node_id]
        if oid in ns.lru:
            ns.lru.move_to_end(oid)

    def pin(self, node_id, oid):
        self.nodes[node_id].pins[oid] += 1

    def unpin(self, node_id, oid):
        ns = self.nodes[node_id]
        if ns.pins[oid] > 1:
            ns.pins[oid] -= 1
        else:
            ns.pins.pop(oid, None)
            self.pump(node_id)

    def set_running(self, node_id, delta):
        ns = self.nodes[node_id]
        ns.running += delta
        if ns.running == 0:
            self.pump(node_id)

    def _add_memory(self, ns, oid, payload):
        ns.data[oid] = payload
        ns.lru[oid] = None
        ns.lru.move_to_end(oid)
        self.entries[oid].memory.add(ns.node_id)
        ns.peak_used = max(ns.peak_used, ns.used)

    def _drop_memory(self, ns, oid):
        payload = ns.data.pop(oid)
        ns.used -= len(payload)
        ns.lru.pop(oid, None)
        ns.prefetched.discard(oid)
        ns.pins.pop(oid, None)
        self.entries[oid].memory.discard(ns.node_id)

    def release(self, node_id, nbytes):
        """Return an unused reservation."""
        ns = self.nodes[node_id]
        if ns.alive and nbytes:
            ns.used -= nbytes
            self.pump(node_id)

    # spilling

    def spill(self, node_id, needed):
        """Free at least ``needed`` bytes on a node if possible. Returns bytes freed."""
        freed, _ = self._spill(self.nodes[node_id], needed)
        if freed == 0 and needed > 0:
            raise NothingToSpill(f"node {node_id}: every resident object is pinned")
        return freed

    def _spill(self, ns, needed, protect_prefetched=False):
        thr = self.config.fuse_threshold
        freed = 0
        batch = []
        batch_bytes = 0

        def enough():
            if freed + batch_bytes < needed:
                return False
            return thr == 0 or not batch or batch_bytes >= thr

        for oid in list(ns.lru):
            if enough():
                break
            if ns.pins.get(oid):
                continue
            if protect_prefetched and oid in ns.prefetched:
                continue
            e = self.entries[oid]
            size = len(ns.data[oid])
            if self._has_other_copy(e, ns.node_id):
                self._drop_memory(ns, oid)
                self.trace.emit(self.loop.now, "object_evicted", oid, ns.node_id, reason="redundant")
                freed += size
            else:
                batch.append(oid)
                batch_bytes += size
        ready = self.loop.now
        if batch:
            tail = not enough()
            ready = self._write_batch(ns, batch, tail=tail)
            freed += batch_bytes
        return freed, ready

    def _write_files(self, ns, groups, *, tail=False, direct=False):
        """Write payload groups to spill files on the node's I/O lane. Returns completion time."""
        cfg = self.config
        ready = self.loop.now
        for items in groups:
            fid = next(self._file_ids)
            f, addrs = write_spill_file(ns.spill_dir, fid, items, tail=tail, direct=direct)
            ns.files[fid] = f
            for oid, addr in addrs.items():
                e = self.entries[oid]
                e.disk[ns.node_id] = addr
                e.checksum = addr.checksum
                self.trace.emit(self.loop.now, "object_spilled", oid, ns.node_id,
                                file=fid, bytes=addr.length, direct=direct)
            ns.metrics.bytes_spilled += f.total_bytes
            ns.metrics.spill_files_created += 1
            ready = ns.io.reserve(self.loop.now, cfg.disk_seek + f.total_bytes / cfg.disk_bandwidth)
        return ready

    def _write_batch(self, ns, oids, tail):
        items = [(oid, ns.data[oid]) for oid in oids]
        if self.config.fuse_threshold == 0:
            groups = [[it] for it in items]
        else:
            groups = [items]
        ready = self._write_files(ns, groups, tail=tail)
        for oid in oids:
            self._drop_memory(ns, oid)
        return ready

    def write_direct(self, node_id, items):
        """Seal payloads straight to a file, bypassing memory."""
        return self._write_files(self.nodes[node_id], [items], direct=True)

    # allocation queue

    def request(self, node_id, size, prio, callback):
        """Queue an allocation. ``callback(mode)`` runs once granted.

        ``mode`` is ``"memory"``, ``"overshoot"`` or, for task returns only, ``"disk"``
        (the fallback when nothing can be evicted).
        """
        ns = self.nodes[node_id]
        req = _AllocRequest(size, prio, callback)
        heapq.heappush(ns.queue, (prio, next(self._seq), req))
        ns.metrics.allocation_queue_peak = max(ns.metrics.allocation_queue_peak, len(ns.queue))
        self.pump(node_id)
        return req

    def pump(self, node_id):
        ns = self.nodes[node_id]
        while ns.alive and ns.queue:
            req = ns.queue[0][2]
            if req.cancelled:
                heapq.heappop(ns.queue)
                continue
            granted = self._try_grant(ns, req)
            if granted is None:
                break
            heapq.heappop(ns.queue)
            ready, mode = granted
            self.loop.at(ready, self._deliver, ns, req, mode)

    def _deliver(self, ns, req, mode):
        if not ns.alive:
            return
        if req.cancelled:
            if mode != "disk":
                self.release(ns.node_id, req.size)
            return
        req.callback(mode)

    def _try_grant(self, ns, req):
        limit = self.config.memory_limit
        now = self.loop.now
        if ns.used + req.size <= limit:
            ns.used += req.size
            return now, "memory"
        _, ready = self._spill(ns, ns.used + req.size - limit,
                               protect_prefetched=req.prio == PRIO_PREFETCH)
        if ns.used + req.size <= limit:
            ns.used += req.size
            return ready, "memory"
        if req.prio == PRIO_RETURN:
            return ready, "disk"
        if req.prio == PRIO_DEMAND and ns.running == 0:
            # nothing else can release memory on this node; let one allocation through
            ns.used += req.size
            return ready, "overshoot"
        return None

    # sealing

    def store_outputs(self, node_id, items, to_disk, on_done):
        """Place task outputs on a node. ``on_done()`` runs once they are durable."""
        ns = self.nodes[node_id]
        if not items:
            self.loop.at(self.loop.now, on_done)
            return

        def landed():
            if ns.alive:
                on_done()

        if to_disk:
            self.loop.at(self.write_direct(node_id, items), landed)
            return
        total = sum(len(p) for _, p in items)

        def granted(mode):
            if mode == "disk":
                self.loop.at(self.write_direct(node_id, items), landed)
                return
            for oid, payload in items:
                self._add_memory(ns, oid, payload)
            on_done()

        self.request(node_id, total, PRIO_RETURN, granted)

    def put(self, node_id, oid, payload, on_done):
        if len(payload) > self.config.memory_limit:
            raise ObjectTooLarge(f"{len(payload)} bytes > memory_limit {self.config.memory_limit}")
        self.store_outputs(node_id, [(oid, payload)], False, on_done)

    # fetching

    def _pick_source(self, e, node_id):
        if node_id in e.disk:
            return "restore", node_id
        mem = sorted(n for n in e.memory if n != node_id and self.nodes[n].alive)
        if mem:
            return "memory", mem[0]
        disk = sorted(n for n in e.disk if n != node_id and self.nodes[n].alive)
        if disk:
            return "disk", disk[0]
        return None

    def fetch(self, node_id, oid, callback, tag=None):
        """Copy ``oid`` into ``node_id``'s memory using space already reserved by the caller.

        ``callback(ok)`` runs when the copy lands (True) or no source exists (False).
        """
        ns = self.nodes[node_id]
        e = self.entries[oid]
        if node_id in e.memory:
            self.release(node_id, e.size)
            self.loop.at(self.loop.now, callback, True)
            return
        if oid in ns.inflight:
            self.release(node_id, e.size)
            ns.inflight[oid][0].append(callback)
            return
        ns.inflight[oid] = ([callback], tag)
        self._start_transfer(ns, oid)

    def _start_transfer(self, ns, oid):
        e = self.entries[oid]
        src = self._pick_source(e, ns.node_id)
        if src is None or e.refcount == 0:
            cbs, _ = ns.inflight.pop(oid)
            self.release(ns.node_id, e.size)
            for cb in cbs:
                self.loop.at(self.loop.now, cb, False)
            return
        kind, src_node = src
        cfg = self.config
        now = self.loop.now
        size = e.size
        src_ns = self.nodes[src_node]
        if kind == "restore":
            end = ns.io.reserve(now, cfg.disk_seek + size / cfg.disk_bandwidth)
        elif kind == "memory":
            src_ns.pins[oid] += 1
            end = ns.net.reserve(now, size / cfg.network_bandwidth)
        else:
            end_disk = src_ns.io.reserve(now, cfg.disk_seek + size / cfg.disk_bandwidth)
            end = max(end_disk, ns.net.reserve(now, size / cfg.network_bandwidth))
        self.loop.at(end + cfg.fetch_latency, self._finish_transfer, ns, oid, kind, src_ns)

    def _finish_transfer(self, ns, oid, kind, src_ns):
        if kind == "memory" and src_ns.pins.get(oid):
            src_ns.pins[oid] -= 1
            if not src_ns.pins[oid]:
                del src_ns.pins[oid]
        if not ns.alive or oid not in ns.inflight:
            return
        e = self.entries[oid]
        payload = None
        if src_ns.alive and e.refcount > 0:
            if kind == "memory":
                payload = src_ns.data.get(oid)
            else:
                addr = e.disk.get(src_ns.node_id)
                if addr is not None:
                    try:
                        payload = read_spilled(src_ns.files[addr.file_id].path, addr)
                    except (SpillFileError, KeyError) as exc:
                        log.warning("dropping unreadable spill copy of %x: %s", oid, exc)
                        self.drop_disk_copy(src_ns.node_id, oid)
        if payload is None:
            self._start_transfer(ns, oid)
            return
        cbs, tag = ns.inflight.pop(oid)
        self._add_memory(ns, oid, payload)
        if kind == "restore":
            ns.metrics.bytes_restored += len(payload)
            self.trace.emit(self.loop.now, "object_restored", oid, ns.node_id, bytes=len(payload))
        else:
            ns.metrics.add_network(len(payload), tag)
            self.trace.emit(self.loop.now, "object_transferred", oid, ns.node_id,
                            source=src_ns.node_id, bytes=len(payload), tag=tag, from_disk=kind == "disk")
        for cb in cbs:
            cb(True)

    def pull(self, oid, from_node, to_node, callback=None, tag=None):
        """Explicit copy between nodes, bypassing the allocation queue."""
        e = self.entries[oid]
        ns = self.nodes[to_node]
        if to_node in e.memory:
            if callback:
                self.loop.at(self.loop.now, callback, True)
            return
        if from_node not in e.node_locations:
            from ..errors import SourceLost
            raise SourceLost(f"object {oid:x} has no copy on node {from_node}")
        ns.used += e.size
        ns.inflight[oid] = ([callback] if callback else [], tag)
        self._start_transfer(ns, oid)

    def drop_disk_copy(self, node_id, oid):
        e = self.entries[oid]
        addr = e.disk.pop(node_id, None)
        if addr is not None:
            self._release_file(self.nodes[node_id], addr.file_id, oid)

    def _release_file(self, ns, file_id, oid):
        f = ns.files.get(file_id)
        if f is None:
            return
        f.live.discard(oid)
        if not f.live:
            delete_spill_file(f)
            del ns.files[file_id]

    # driver reads and freeing

    def read(self, oid):
        """Bytes of any live copy, or None when the object has none readable."""
        e = self.entries[oid]
        for n in sorted(e.memory):
            return self.nodes[n].data[oid]
        for n in sorted(e.disk):
            addr = e.disk[n]
            ns = self.nodes[n]
            try:
                return read_spilled(ns.files[addr.file_id].path, addr)
            except (SpillFileError, KeyError) as exc:
                log.warning("dropping unreadable spill copy of %x: %s", oid, exc)
                self.drop_disk_copy(n, oid)
        return None

    def free(self, oid):
        e = self.entries[oid]
        for n in sorted(e.memory):
            ns = self.nodes[n]
            self._drop_memory(ns, oid)
            self.trace.emit(self.loop.now, "object_evicted", oid, n, reason="freed")
            self.pump(n)
        for n in sorted(e.disk):
            self._release_file(self.nodes[n], e.disk[n].file_id, oid)
        e.disk.clear()

    def discard_copies(self, oid):
        """Forget every copy without tracing a free (used for outputs nobody wants)."""
        self.free(oid)

    # introspection

    def usage(self, node_id):
        return self.nodes[node_id].used

    def spill_files(self, node_id=None):
        ids = [node_id] if node_id is not None else sorted(self.nodes)
        return [f for n in ids for f in self.nodes[n].files.values()]
