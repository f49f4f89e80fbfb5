import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_records
from futureshuffle import FailureEvent, FailurePlan, StoreConfig, start_cluster
from futureshuffle.errors import SingleBlockOverThreshold, SupportMismatch, Unnormalized
from futureshuffle.shuffle import (CountJob, ShuffleConfig, SortJob, best_effort_merge,
                                   dynamic_repartition, estimate_blocks, intermediate_blocks,
                                   kl_divergence, magnet_shuffle, normalize, pipelined_consume,
                                   push_shuffle_pipelined, reducer_visible_blocks,
                                   repartition_shuffle, riffle_shuffle, simple_shuffle,
                                   speculative_shuffle, streaming_shuffle, uniform_boundaries)
from futureshuffle.shuffle.records import as_records, sort_records

M, R = 8, 8


@pytest.fixture(scope="module")
def parts():
    return [random_records(300, 100 + i).tobytes() for i in range(M)]


@pytest.fixture(scope="module")
def oracle(parts):
    return sort_records(as_records(b"".join(parts))).tobytes()


def flatten(rt, out):
    chunks = []
    for item in out:
        if isinstance(item, list):
            chunks.append(sort_records(as_records(b"".join(rt.get(r) for r in item))).tobytes())
        else:
            chunks.append(rt.get(item))
    return b"".join(chunks)


VARIANTS = [
    ("simple", simple_shuffle, {}),
    ("riffle", riffle_shuffle, {"F": 4}),
    ("magnet", magnet_shuffle, {"F": 4}),
    ("push", push_shuffle_pipelined, {"P": 3, "keep_map_outputs": True}),
    ("push_star", push_shuffle_pipelined, {"P": 3}),
    ("best_effort", best_effort_merge, {"F": 4, "merge_timeout": 0.05}),
    ("speculative", speculative_shuffle, {"speculation": (0.01, 1)}),
    ("repartition", repartition_shuffle, {"skew_memory_threshold": 8000}),
]


@pytest.mark.parametrize("name,fn,kw", VARIANTS, ids=[v[0] for v in VARIANTS])
def test_variant_matches_sort_oracle(tmp_path, parts, oracle, name, fn, kw):
    cfg = StoreConfig(memory_limit=150_000, fuse_threshold=40_000, spill_dir=str(tmp_path))
    with start_cluster(4, 2, cfg) as c:
        rt = c.runtime
        inputs = [rt.put(p, node=i % 4) for i, p in enumerate(parts)]
        out = fn(rt, SortJob(uniform_boundaries(R)), inputs, ShuffleConfig(M=M, R=R, **kw))
        assert flatten(rt, out) == oracle
        rt.drop_refs([r for item in out for r in (item if isinstance(item, list) else [item])])
        rt.drop_refs(inputs)
        rt.sleep(1.0)
        assert all(c.store.usage(n) == 0 for n in c.store.nodes)
        assert rt.metrics()["replay_mismatches"] == 0


@pytest.mark.parametrize("keep", [False, True])
def test_push_shuffle_survives_node_loss(tmp_path, parts, oracle, keep):
    plan = FailurePlan([FailureEvent("kill_node", 2, after_k_tasks=10)])
    cfg = StoreConfig(memory_limit=400_000, fuse_threshold=100_000, spill_dir=str(tmp_path))
    with start_cluster(4, 2, cfg, failure_plan=plan) as c:
        rt = c.runtime
        job = SortJob(uniform_boundaries(R), loader=lambda i: parts[i])
        out = push_shuffle_pipelined(rt, job, list(range(M)),
                                     ShuffleConfig(M=M, R=R, P=3, keep_map_outputs=keep))
        assert flatten(rt, out) == oracle
        assert rt.metrics()["task_retries"] > 0


def test_block_counts_match_planning(tmp_path, parts):
    for variant, fn, kw in VARIANTS[:2]:
        with start_cluster(4, 2, StoreConfig(spill_dir=str(tmp_path / variant))) as c:
            rt = c.runtime
            inputs = [rt.put(p) for p in parts]
            out = fn(rt, SortJob(uniform_boundaries(R)), inputs, ShuffleConfig(M=M, R=R, **kw))
            rt.wait(out, num_ready=len(out))
            m = rt.metrics()
            assert m["blocks_created"] == intermediate_blocks(variant, M, R, **kw)
            assert m["reducer_visible_blocks"] == reducer_visible_blocks(variant, M, R, **kw)
    assert estimate_blocks(64 << 20, 2 << 20).blocks == 1024


def test_pipelined_consume_yields_in_completion_order(cluster):
    rt = cluster.runtime
    rt.register("slow", lambda i: i)
    rt.slowdowns.append(lambda s: 1.0 + 100 * s.labels.get("rank", 0))
    refs = [rt.call("slow", i, labels={"rank": 3 - i}) for i in range(4)]
    seen = pipelined_consume(rt, refs, lambda v: (v, rt.now))
    assert [v for v, _ in seen] == [3, 2, 1, 0]
    # the first value is consumed before the slowest task has finished
    assert seen[0][1] < seen[-1][1]


def test_dynamic_repartition_bounds_task_input(cluster):
    rt = cluster.runtime
    rt.register("cat", lambda part, *bs: b"".join(bs))
    sizes = [400, 300, 900, 100, 100, 250, 50, 600]
    refs = [rt.put(bytes([i]) * n) for i, n in enumerate(sizes)]
    leaves = dynamic_repartition(rt, "cat", 0, refs, 1000)
    assert b"".join(rt.get(r) for r in leaves) == b"".join(bytes([i]) * n for i, n in enumerate(sizes))
    started = [e for e in cluster.trace.of_kind("task_started") if e.detail.get("role") == "reduce"]
    assert len(started) == len(leaves) > 1
    assert all(e.detail["input_bytes"] <= 1000 for e in started)
    # a split of n blocks never needs more than n leaves or depth above n - 1
    assert all(e.detail["depth"] < len(sizes) for e in started)


def test_single_oversized_block_warns(cluster):
    rt = cluster.runtime
    rt.register("cat", lambda part, *bs: b"".join(bs))
    refs = [rt.put(b"a" * 50), rt.put(b"b" * 5000)]
    with pytest.warns(SingleBlockOverThreshold):
        leaves = dynamic_repartition(rt, "cat", 0, refs, 1000)
    assert len(leaves) == 2
    with pytest.raises(ValueError):
        dynamic_repartition(rt, "cat", 0, refs, 0)


def test_best_effort_with_stalled_merge_falls_back(tmp_path, parts, oracle):
    with start_cluster(4, 2, StoreConfig(spill_dir=str(tmp_path))) as c:
        rt = c.runtime
        rt.slowdowns.append(lambda s: np.inf if (s.labels.get("role") == "merge"
                                                 and s.labels.get("target") == 1) else 1.0)
        inputs = [rt.put(p) for p in parts]
        out = best_effort_merge(rt, SortJob(uniform_boundaries(R)), inputs,
                                ShuffleConfig(M=M, R=R, F=4, merge_timeout=0.05))
        assert flatten(rt, out) == oracle
        assert c.trace.count("task_cancelled") >= 1
        fallback = [e for e in c.trace.of_kind("task_started") if e.detail.get("fallback")]
        assert fallback and all(e.detail["role"] == "reduce" for e in fallback)


def test_speculative_duplicate_wins_and_loser_is_cancelled(tmp_path, parts, oracle):
    with start_cluster(4, 2, StoreConfig(spill_dir=str(tmp_path))) as c:
        rt = c.runtime
        rt.slowdowns.append(lambda s: 50.0 if (s.labels.get("index") == 0
                                               and "duplicate" not in s.labels) else 1.0)
        job = SortJob(uniform_boundaries(R), loader=lambda i: parts[i])
        out = speculative_shuffle(rt, job, list(range(M)),
                                  ShuffleConfig(M=M, R=R, speculation=(0.005, 1)))
        assert flatten(rt, out) == oracle
        dups = [e for e in c.trace.of_kind("task_started") if "duplicate" in e.detail]
        assert len(dups) == 1 and dups[0].detail["index"] == 0
        assert c.trace.count("task_cancelled", index=0) == 1


def words_corpus(n_parts, seed):
    rng = np.random.default_rng(seed)
    vocab = [f"w{i}" for i in range(40)]
    weights = rng.dirichlet(np.ones(len(vocab)))
    return [[vocab[k] for k in rng.choice(len(vocab), 200, p=weights)] for _ in range(n_parts)]


def test_streaming_shuffle_partials_converge(tmp_path):
    corpus = words_corpus(12, 1)
    batch = {}
    for part in corpus:
        for w in part:
            batch[w] = batch.get(w, 0) + 1
    with start_cluster(2, 2, StoreConfig(spill_dir=str(tmp_path))) as c:
        rt = c.runtime
        inputs = [rt.put(p) for p in corpus]
        run = streaming_shuffle(rt, CountJob(5), inputs, ShuffleConfig(M=12, R=5, P=4))
        partials = list(run)
        assert [p.round for p in partials] == [1, 2, 3]
        assert partials[-1].value == dict(sorted(batch.items()))
        assert partials[0].timestamp < run.completed_at
        sums = [sum(p.value.values()) for p in partials]
        assert sums == [800, 1600, 2400]
        assert kl_divergence(normalize(batch), normalize(partials[-1].value)) == 0.0


def kl_oracle(p, q):
    mpmath.mp.dps = 50
    return float(mpmath.fsum(mpmath.mpf(a) * mpmath.log(mpmath.mpf(a) / mpmath.mpf(b))
                             for a, b in zip(p, q) if a > 0))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1000), st.integers(1, 1000)), min_size=1, max_size=30))
def test_kl_matches_high_precision_oracle(pairs):
    a = [x for x, _ in pairs]
    if sum(a) == 0:
        a[0] = 1
    b = [y for _, y in pairs]
    p = [x / sum(a) for x in a]
    q = [y / sum(b) for y in b]
    got = kl_divergence(p, q)
    assert got >= 0
    assert abs(got - kl_oracle(p, q)) <= 1e-12
    assert kl_divergence(p, p) == 0.0


def test_kl_errors():
    with pytest.raises(SupportMismatch):
        kl_divergence([0.5, 0.5], [1.0])
    with pytest.raises(SupportMismatch):
        kl_divergence({"a": 1.0}, {"b": 1.0})
    with pytest.raises(SupportMismatch):
        kl_divergence([0.5, 0.5], [1.0, 0.0])
    with pytest.raises(Unnormalized):
        kl_divergence([0.5, 0.6], [0.5, 0.5])
