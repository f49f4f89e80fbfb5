"""Straggler handling: speculative duplicates and best-effort merging."""

import logging
import math

from .algorithms import _drop_all, _magnet_stage, _setup, reducer_nodes, submit_reduce
from .records import partition_groups

log = logging.getLogger(__name__)


def _running_since(rt, ref):
    state, node, started = rt.task_info(ref)
    return (node, started) if state == "running" else (node, None)


def run_speculatively(rt, submissions, delay_threshold, max_dups=1):
    """Run several tasks, duplicating any attempt that runs past ``delay_threshold``.

    ``submissions`` holds ``(function_id, args, kwargs)`` triples for
    deterministic functions. The first attempt to finish wins; the others are
    cancelled and their refs dropped. Returns the winners' ref lists in input
    order.
    """
    attempts = []
    for fid, args, kw in submissions:
        attempts.append([rt.submit(fid, *args, **kw)])
    winners = [None] * len(attempts)
    open_ = set(range(len(attempts)))
    while open_:
        heads = [att[0] for i in sorted(open_) for att in attempts[i]]
        ready = set(rt.wait(heads, num_ready=len(heads), timeout=0).ready)
        for i in sorted(open_):
            win = next((k for k, att in enumerate(attempts[i]) if att[0] in ready), None)
            if win is None:
                continue
            winners[i] = attempts[i][win]
            for k, att in enumerate(attempts[i]):
                if k != win:
                    rt.cancel(att[0])
                    rt.drop_refs(att)
            open_.discard(i)
        if not open_:
            break
        now = rt.now
        next_check = math.inf
        for i in sorted(open_):
            node, started = _running_since(rt, attempts[i][-1][0])
            if started is None:
                next_check = min(next_check, now + delay_threshold)
                continue
            due = started + delay_threshold
            if len(attempts[i]) - 1 < max_dups and due <= now:
                fid, args, kw = submissions[i]
                kw = dict(kw)
                labels = dict(kw.pop("labels", {}) or {})
                labels["duplicate"] = len(attempts[i])
                kw["placement"] = (node + 1) % rt.num_nodes if node is not None else None
                attempts[i].append(rt.submit(fid, *args, labels=labels, **kw))
                log.info("speculating on task %d (duplicate %d)", i, labels["duplicate"])
            elif len(attempts[i]) - 1 < max_dups:
                next_check = min(next_check, due)
        heads = [att[0] for i in sorted(open_) for att in attempts[i]]
        timeout = None if math.isinf(next_check) else max(0.0, next_check - rt.now)
        rt.wait(heads, num_ready=1, timeout=timeout)
    return winners


def speculative_submit(rt, function_id, *args, delay_threshold, max_dups=1, **kw):
    """Submit one task with speculation and return the winning attempt's refs."""
    return run_speculatively(rt, [(function_id, args, kw)], delay_threshold, max_dups)[0]


def speculative_shuffle(rt, job, inputs, cfg=None, *, delay_threshold=None, max_dups=1):
    """Simple shuffle whose map stage runs under speculation."""
    cfg, names, N = _setup(rt, job, inputs, cfg)
    if delay_threshold is None:
        if cfg.speculation is None:
            raise ValueError("speculative_shuffle needs a delay threshold")
        delay_threshold, max_dups = cfg.speculation
    R = cfg.R
    subs = []
    for i, item in enumerate(inputs):
        placement = None if hasattr(item, "object_id") else i % N
        subs.append((names["map"], (item, R),
                     {"num_returns": R, "placement": placement,
                      "labels": {"role": "map", "index": i}}))
    maps = run_speculatively(rt, subs, delay_threshold, max_dups)
    out = [submit_reduce(rt, names, r, [m[r] for m in maps], r % N) for r in range(R)]
    _drop_all(rt, maps)
    return out


def best_effort_merge(rt, job, inputs, cfg=None, merge_timeout=None):
    """Push-based shuffle that gives up on slow merge tasks.

    A merge task running longer than ``merge_timeout`` is cancelled and the
    reducers it served read the original map blocks instead. Map blocks are
    therefore always kept until the reducers are submitted.
    """
    cfg, names, N = _setup(rt, job, inputs, cfg)
    if merge_timeout is None:
        merge_timeout = cfg.merge_timeout
    timeout = math.inf if merge_timeout is None else merge_timeout
    R = cfg.R
    maps, merged = _magnet_stage(rt, names, job, inputs, cfg, N)
    pending = {(g, n) for g, per in enumerate(merged) for n in per}
    failed = set()
    while pending:
        now = rt.now
        deadlines = []
        for key in sorted(pending):
            g, n = key
            _, started = _running_since(rt, merged[g][n][0])
            if started is None:
                continue
            if started + timeout <= now:
                rt.cancel(merged[g][n][0])
                log.info("merge (group %d, node %d) timed out; falling back to map blocks", g, n)
                failed.add(key)
                pending.discard(key)
            else:
                deadlines.append(started + timeout)
        if not pending:
            break
        heads = [merged[g][n][0] for g, n in sorted(pending)]
        if math.isinf(timeout):
            res = rt.wait(heads, num_ready=len(heads))
        else:
            wake = min(deadlines) if deadlines else now + timeout
            res = rt.wait(heads, num_ready=len(heads), timeout=max(0.0, wake - rt.now))
        done = set(res.ready)
        pending = {(g, n) for g, n in pending if merged[g][n][0] not in done}
    owner = reducer_nodes(R, N)
    lo_of = {n: lo for n, (lo, hi) in enumerate(partition_groups(R, N))}
    out = []
    for r in range(R):
        n = owner[r]
        payloads = []
        for g, per in enumerate(merged):
            if (g, n) in failed:
                payloads.extend(m[r] for m in maps[g])
            else:
                payloads.append(per[n][r - lo_of[n]])
        fallback = any((g, n) in failed for g in range(len(merged)))
        out.append(submit_reduce(rt, names, r, payloads, n, fallback=fallback))
    for per in merged:
        _drop_all(rt, per.values())
    for gm in maps:
        _drop_all(rt, gm)
    return out
