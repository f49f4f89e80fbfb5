"""Shuffle variants expressed purely through submit / wait / drop_ref."""

import logging

from .config import ShuffleConfig, chunks
from .jobs import register_job
from .records import partition_groups

log = logging.getLogger(__name__)


def _setup(rt, job, inputs, cfg):
    if cfg is None:
        cfg = ShuffleConfig(M=len(inputs), R=job.num_partitions, num_nodes=rt.num_nodes)
    if cfg.M != len(inputs):
        raise ValueError(f"cfg.M={cfg.M} but {len(inputs)} inputs were given")
    if cfg.R != job.num_partitions:
        raise ValueError(f"cfg.R={cfg.R} but the job has {job.num_partitions} partitions")
    return cfg, register_job(rt, job), cfg.num_nodes or rt.num_nodes


def _is_ref(x):
    return hasattr(x, "object_id")


def submit_map(rt, names, item, index, num_groups, node, **labels):
    """One map task returning ``num_groups`` blocks. Ref inputs are placed by locality."""
    placement = None if _is_ref(item) else node
    return rt.submit(names["map"], item, num_groups, num_returns=num_groups,
                     placement=placement, labels={"role": "map", "index": index, **labels})


def submit_merge(rt, names, lo, hi, payloads, node, **labels):
    return rt.submit(names["merge"], lo, hi, *payloads, num_returns=hi - lo, placement=node,
                     labels={"role": "merge", **labels})


def submit_reduce(rt, names, part, payloads, node, **labels):
    return rt.call(names["reduce"], part, *payloads, placement=node,
                   labels={"role": "reduce", "partition": part, "inputs": len(payloads), **labels})


def _drop_all(rt, groups):
    for refs in groups:
        rt.drop_refs(refs)


def simple_shuffle(rt, job, inputs, cfg=None):
    """M map tasks each emit R blocks, R reduce tasks each read M blocks."""
    cfg, names, N = _setup(rt, job, inputs, cfg)
    R = cfg.R
    maps = [submit_map(rt, names, item, i, R, i % N) for i, item in enumerate(inputs)]
    out = [submit_reduce(rt, names, r, [m[r] for m in maps], r % N) for r in range(R)]
    _drop_all(rt, maps)
    return out


def riffle_shuffle(rt, job, inputs, cfg=None):
    """Groups of F co-located maps; one local merge per group turns F×R blocks into R."""
    cfg, names, N = _setup(rt, job, inputs, cfg)
    R = cfg.R
    merged = []
    for g, (a, b) in enumerate(chunks(cfg.M, cfg.F)):
        node = g % N
        maps = [submit_map(rt, names, inputs[i], i, R, node, group=g) for i in range(a, b)]
        payloads = [m[r] for m in maps for r in range(R)]
        merged.append(submit_merge(rt, names, 0, R, payloads, node, group=g))
        _drop_all(rt, maps)
    out = [submit_reduce(rt, names, r, [m[r] for m in merged], r % N) for r in range(R)]
    _drop_all(rt, merged)
    return out


def reducer_nodes(R, N):
    """Node owning each partition: contiguous balanced ranges."""
    owner = []
    for n, (lo, hi) in enumerate(partition_groups(R, N)):
        owner.extend([n] * (hi - lo))
    return owner


def _magnet_stage(rt, names, job, inputs, cfg, N):
    R = cfg.R
    groups = [(n, lo, hi) for n, (lo, hi) in enumerate(partition_groups(R, N)) if hi > lo]
    maps, merged = [], []
    for g, (a, b) in enumerate(chunks(cfg.M, cfg.F)):
        gm = [submit_map(rt, names, inputs[i], i, R, i % N, group=g) for i in range(a, b)]
        maps.append(gm)
        per_node = {}
        for n, lo, hi in groups:
            payloads = [m[r] for m in gm for r in range(lo, hi)]
            per_node[n] = submit_merge(rt, names, lo, hi, payloads, n, group=g, target=n)
        merged.append(per_node)
    return maps, merged


def magnet_shuffle(rt, job, inputs, cfg=None):
    """Map blocks are pushed to merge tasks pinned on each reducer's node.

    Reduce tasks run where their merged blocks already are, so the reduce
    stage moves no data across nodes.
    """
    cfg, names, N = _setup(rt, job, inputs, cfg)
    maps, merged = _magnet_stage(rt, names, job, inputs, cfg, N)
    for gm in maps:
        _drop_all(rt, gm)
    owner = reducer_nodes(cfg.R, N)
    lo_of = {n: lo for n, (lo, hi) in enumerate(partition_groups(cfg.R, N))}
    out = []
    for r in range(cfg.R):
        n = owner[r]
        out.append(submit_reduce(rt, names, r, [g[n][r - lo_of[n]] for g in merged], n))
    for g in merged:
        _drop_all(rt, g.values())
    return out


def push_shuffle_pipelined(rt, job, inputs, cfg=None):
    """Map and merge tasks in rounds of P maps, gated by ``wait``.

    Before round i+1's merges are submitted, round i's merges must have
    finished, so at most one merge round runs while the next round's maps do.
    With ``keep_map_outputs=False`` each round's map blocks are dropped as soon
    as its merge tasks are submitted, which lets the store free them once merged
    instead of spilling them.
    """
    cfg, names, N = _setup(rt, job, inputs, cfg)
    R = cfg.R
    P = cfg.P or rt.cluster.capacity
    groups = partition_groups(R, N)
    live = [(n, lo, hi) for n, (lo, hi) in enumerate(groups) if hi > lo]
    kept = []
    merged = []
    prev = []
    for k, (a, b) in enumerate(chunks(cfg.M, P)):
        maps = [submit_map(rt, names, inputs[i], i, N, i % N, round=k) for i in range(a, b)]
        if prev:
            rt.wait(prev, num_ready=len(prev))
        round_merges = {}
        for n, lo, hi in live:
            round_merges[n] = submit_merge(rt, names, lo, hi, [m[n] for m in maps], n,
                                           round=k, target=n)
        merged.append(round_merges)
        prev = [refs[0] for refs in round_merges.values()]
        if cfg.keep_map_outputs:
            kept.extend(maps)
        else:
            _drop_all(rt, maps)
    out = []
    for n, lo, hi in live:
        for r in range(lo, hi):
            out.append(submit_reduce(rt, names, r, [rm[n][r - lo] for rm in merged], n))
    for rm in merged:
        _drop_all(rt, rm.values())
    _drop_all(rt, kept)
    return out


def pipelined_consume(rt, refs, consumer_fn):
    """Call ``consumer_fn(value)`` on each ref as soon as it is ready.

    Results come back in completion order.
    """
    pending = list(refs)
    results = []
    while pending:
        ready, pending = rt.wait(pending, num_ready=1)
        for r in ready:
            results.append(consumer_fn(rt.get(r)))
    return results
