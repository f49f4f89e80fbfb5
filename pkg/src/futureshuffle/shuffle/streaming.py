"""Streaming shuffle with per-round partial aggregates, and the KL error metric."""

import copy
import math
from collections.abc import Mapping
from dataclasses import dataclass

from ..errors import SupportMismatch, Unnormalized
from .algorithms import _setup, submit_map
from .config import chunks


@dataclass(frozen=True)
class PartialAggregate:
    round: int          # rounds of map output folded in, 1-based
    value: object
    timestamp: float


class StreamingRun:
    """Iterator over ``PartialAggregate`` objects, one per round.

    After exhaustion ``final_refs`` holds the reducer-state refs of the last
    round, and ``completed_at`` the simulated time the last state was sealed.
    """

    def __init__(self, rt, job, inputs, cfg):
        self.rt = rt
        self.job = job
        self.inputs = inputs
        self.cfg, self.names, self.N = _setup(rt, job, inputs, cfg)
        self.final_refs = None
        self.completed_at = None
        self._gen = self._run()

    def __iter__(self):
        return self

    def __next__(self):
        return next(self._gen)

    def _aggregate(self, k, states):
        rt = self.rt
        rt.wait(states, num_ready=len(states))
        values = [copy.deepcopy(rt.get(s)) for s in states]
        return PartialAggregate(k, copy.deepcopy(self.job.aggregate(values)), rt.now)

    def _run(self):
        rt, names, cfg, N = self.rt, self.names, self.cfg, self.N
        R = cfg.R
        P = cfg.P or rt.cluster.capacity
        states = [None] * R
        prev = None
        for k, (a, b) in enumerate(chunks(cfg.M, P)):
            maps = [submit_map(rt, names, self.inputs[i], i, R, i % N, round=k)
                    for i in range(a, b)]
            new = [rt.call(names["reduce_state"], r, states[r], *[m[r] for m in maps],
                           placement=r % N, labels={"role": "reduce", "round": k, "partition": r})
                   for r in range(R)]
            for m in maps:
                rt.drop_refs(m)
            if prev is not None:
                yield self._aggregate(k, prev)
                rt.drop_refs(prev)
            prev = states = new
        final = self._aggregate(len(chunks(cfg.M, P)), prev)
        self.final_refs = prev
        self.completed_at = final.timestamp
        yield final


def streaming_shuffle(rt, job, inputs, cfg=None):
    """Run ``job`` in rounds of P map tasks and yield a partial aggregate per round.

    Round r+1's maps are submitted before round r's aggregate is collected, so
    the shuffle keeps moving while the caller looks at partial results.
    """
    return StreamingRun(rt, job, inputs, cfg)


def _as_aligned(p, q):
    if isinstance(p, Mapping) or isinstance(q, Mapping):
        if not (isinstance(p, Mapping) and isinstance(q, Mapping)):
            raise SupportMismatch("cannot compare a mapping with a sequence")
        if set(p) != set(q):
            raise SupportMismatch("distributions have different supports")
        keys = sorted(p)
        return [float(p[k]) for k in keys], [float(q[k]) for k in keys]
    p, q = [float(x) for x in p], [float(x) for x in q]
    if len(p) != len(q):
        raise SupportMismatch(f"lengths differ: {len(p)} vs {len(q)}")
    return p, q


def kl_divergence(p, p_hat):
    """Sum of p * log(p / p_hat) over the support, in nats."""
    p, q = _as_aligned(p, p_hat)
    for name, dist in (("p", p), ("p_hat", q)):
        if any(x < 0 for x in dist):
            raise ValueError(f"{name} has negative mass")
        if abs(math.fsum(dist) - 1.0) > 1e-9:
            raise Unnormalized(f"{name} sums to {math.fsum(dist)!r}")
    terms = []
    for a, b in zip(p, q):
        if a == 0:
            continue
        if b <= 0:
            raise SupportMismatch("p_hat is zero where p is positive")
        terms.append(a * math.log(a / b))
    return max(0.0, math.fsum(terms))


def normalize(counts):
    """Counts mapping to a probability mapping."""
    total = math.fsum(counts.values())
    return {k: v / total for k, v in counts.items()}
