"""Recursive repartitioning of oversized reduce inputs."""

import logging
import math
import warnings

from ..errors import SingleBlockOverThreshold
from .algorithms import _drop_all, _setup, submit_map, submit_reduce

log = logging.getLogger(__name__)


def _bisect(sizes):
    """Cut index that best balances bytes between the two halves."""
    total = sum(sizes)
    best, best_gap, acc = 1, math.inf, 0
    for k in range(1, len(sizes)):
        acc += sizes[k - 1]
        gap = abs(2 * acc - total)
        if gap < best_gap:
            best, best_gap = k, gap
    return best


def dynamic_repartition(rt, reduce_fn, part, refs, memory_threshold, node=None):
    """Split a reducer whose inputs exceed ``memory_threshold`` bytes.

    The block list is bisected by bytes and each half handled recursively, so
    every reduce task reads at most ``memory_threshold`` bytes unless a single
    block is already bigger. Returns the leaf reduce refs in input order;
    together they hold the partition's output.
    """
    if memory_threshold <= 0:
        raise ValueError("memory_threshold must be positive")
    if refs:
        rt.wait(refs, num_ready=len(refs))
    sizes = [rt.object_size(r) for r in refs]
    leaves = []

    def split(lo, hi, depth):
        total = sum(sizes[lo:hi])
        if total <= memory_threshold or hi - lo <= 1:
            if total > memory_threshold:
                warnings.warn(SingleBlockOverThreshold(
                    f"partition {part}: one block of {total} bytes exceeds {memory_threshold}"))
            leaves.append(rt.call(reduce_fn, part, *refs[lo:hi], placement=node,
                                  labels={"role": "reduce", "partition": part,
                                          "inputs": hi - lo, "depth": depth,
                                          "leaf_bytes": total}))
            return
        k = lo + _bisect(sizes[lo:hi])
        split(lo, k, depth + 1)
        split(k, hi, depth + 1)

    split(0, len(refs), 0)
    return leaves


def repartition_shuffle(rt, job, inputs, cfg=None, memory_threshold=None):
    """Simple shuffle whose reducers are split with ``dynamic_repartition``.

    Returns one list of leaf refs per partition.
    """
    cfg, names, N = _setup(rt, job, inputs, cfg)
    threshold = memory_threshold or cfg.skew_memory_threshold
    if threshold is None:
        raise ValueError("repartition_shuffle needs a memory threshold")
    R = cfg.R
    maps = [submit_map(rt, names, item, i, R, i % N) for i, item in enumerate(inputs)]
    out = [dynamic_repartition(rt, names["reduce"], r, [m[r] for m in maps], threshold)
           for r in range(R)]
    _drop_all(rt, maps)
    return out
