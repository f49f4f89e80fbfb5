import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from futureshuffle import FailureEvent, FailurePlan, StoreConfig, start_cluster
from futureshuffle.errors import (DeadlockError, DeadReference, DoubleDrop, GetTimeoutError,
                                  InlineArgumentTooLarge, ReconstructionFailed,
                                  TaskCancelledError, TaskFailedError, UnknownFunction)

KiB = 1 << 10


def fill(tag, n):
    return bytes([tag % 256]) * n


def concat(*parts):
    return b"".join(parts)


@pytest.fixture
def rt(cluster):
    r = cluster.runtime
    r.register("fill", fill)
    r.register("concat", concat)
    r.register("split", lambda b: (b[: len(b) // 2], b[len(b) // 2:]), num_returns=2)
    return r


def test_submit_and_get(rt):
    a = rt.call("fill", 1, 10)
    b = rt.call("fill", 2, 5)
    c = rt.call("concat", a, b)
    assert rt.get(c) == b"\x01" * 10 + b"\x02" * 5
    lo, hi = rt.submit("split", c)
    assert rt.get(lo) + rt.get(hi) == rt.get(c)


def test_error_contracts(rt):
    with pytest.raises(UnknownFunction):
        rt.call("nope")
    with pytest.raises(InlineArgumentTooLarge):
        rt.call("concat", b"x" * 4096)
    r = rt.call("fill", 0, 4)
    rt.drop_ref(r)
    with pytest.raises(DoubleDrop):
        rt.drop_ref(r)
    with pytest.raises(DeadReference):
        rt.get(r)
    with pytest.raises(DeadReference):
        rt.call("concat", r)


def test_refcount_tracks_handles_and_pending_tasks(rt, cluster):
    a = rt.call("fill", 3, 100)
    assert rt.refcount(a) == 1
    b = rt.call("concat", a)
    assert rt.refcount(a) == 2
    rt.drop_ref(a)
    rt.get(b)
    assert cluster.store.entries[a.object_id].refcount == 0
    assert rt.object_state(a) == "freed"


def test_wait_returns_in_completion_order(rt, cluster):
    rt.slowdowns.append(lambda s: 50.0 if s.labels.get("slow") else 1.0)
    slow = rt.call("fill", 1, KiB, labels={"slow": True})
    fast = [rt.call("fill", i, KiB) for i in range(3)]
    ready, pending = rt.wait([slow] + fast, num_ready=3)
    assert set(ready) == set(fast) and pending == [slow]
    times = [cluster.store.entries[r.object_id].sealed_at for r in ready]
    assert times == sorted(times)
    res = rt.wait([slow], timeout=0)
    assert res.timed_out and res.ready == []
    with pytest.raises(ValueError):
        rt.wait([slow], num_ready=2)


def test_get_timeout_and_deadlock(rt):
    rt.slowdowns.append(lambda s: math.inf if s.labels.get("stuck") else 1.0)
    r = rt.call("fill", 1, 10, labels={"stuck": True})
    with pytest.raises(GetTimeoutError):
        rt.get(r, timeout=0.5)
    with pytest.raises(DeadlockError):
        rt.get(r)
    assert rt.cancel(r)
    with pytest.raises(TaskCancelledError):
        rt.get(r)


def test_cancel_propagates_to_dependents(rt):
    rt.slowdowns.append(lambda s: math.inf if s.labels.get("stuck") else 1.0)
    a = rt.call("fill", 1, 10, labels={"stuck": True})
    b = rt.call("concat", a)
    rt.cancel(a)
    with pytest.raises(TaskCancelledError):
        rt.get(b)
    done = rt.call("fill", 2, 10)
    rt.get(done)
    assert rt.cancel(done) is False


def test_application_error_is_not_retried(rt):
    rt.register("boom", lambda: 1 / 0)
    r = rt.call("boom")
    with pytest.raises(TaskFailedError) as info:
        rt.get(r)
    assert isinstance(info.value.cause, ZeroDivisionError)
    assert rt.metrics()["task_retries"] == 0
    with pytest.raises(TaskFailedError):
        rt.get(rt.call("concat", r))


def test_task_context_rng_is_keyed_by_seed_and_task(tmp_path):
    out = []
    for _ in range(2):
        with start_cluster(1, 1, StoreConfig(spill_dir=str(tmp_path)), seed=5) as c:
            rt = c.runtime
            rt.register("draw", lambda: int(rt.current_context().rng.integers(0, 1 << 30)))
            out.append([rt.get(rt.call("draw")) for _ in range(3)])
    assert out[0] == out[1] and len(set(out[0])) == 3


def test_lineage_replay_after_node_loss(rt, cluster):
    a = rt.call("fill", 4, KiB, placement=1)
    b = rt.call("concat", a, placement=1)
    c = rt.call("concat", b, placement=1)
    rt.drop_refs([a, b])
    rt.wait([c])
    cluster.kill_node(1)
    assert rt.object_state(c) == "lost"
    assert rt.get(c) == fill(4, KiB)
    m = rt.metrics()
    assert m["reconstructions"] == 3 and m["replay_mismatches"] == 0
    retried = [e.subject for e in cluster.trace.of_kind("task_retried")]
    assert sorted(retried) == sorted({a.creator_task, b.creator_task, c.creator_task})


def test_nondeterministic_task_cannot_be_replayed(rt, cluster):
    r = rt.call("fill", 1, KiB, placement=2, deterministic=False)
    rt.wait([r])
    cluster.kill_node(2)
    with pytest.raises(ReconstructionFailed):
        rt.get(r)


def test_kill_executor_retries_without_reconstruction(tmp_path):
    plan = FailurePlan([FailureEvent("kill_executor", 0, slot=0, at_time=0.0001)])
    with start_cluster(1, 2, StoreConfig(spill_dir=str(tmp_path)), failure_plan=plan) as c:
        rt = c.runtime
        rt.register("fill", fill)
        rt.register("concat", concat)
        parts = [rt.call("fill", i, 64 * KiB) for i in range(4)]
        assert rt.get(rt.call("concat", *parts)) == b"".join(fill(i, 64 * KiB) for i in range(4))
        m = rt.metrics()
        assert m["task_retries"] == 1 and m["reconstructions"] == 0
        assert c.trace.count("task_retried", reason="executor_failure") == 1


def test_failure_plan_round_trip_and_fires_once(tmp_path):
    plan = FailurePlan([FailureEvent("kill_node", 1, after_k_tasks=2),
                        FailureEvent("restart_node", 1, after_k_tasks=4)])
    assert FailurePlan.from_dict(plan.to_dict()) == plan
    with start_cluster(2, 1, StoreConfig(spill_dir=str(tmp_path)), failure_plan=plan) as c:
        rt = c.runtime
        rt.register("fill", fill)
        refs = [rt.call("fill", i, 100, placement=i % 2) for i in range(10)]
        assert [rt.get(r) for r in refs] == [fill(i, 100) for i in range(10)]
        assert c.trace.count("node_failed") == 1
        assert c.trace.count("node_restarted") == 1
        assert c.nodes[1].alive
    assert not any(ev.fired for ev in plan.events)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3 * KiB), st.lists(st.integers(0, 50), max_size=3)),
                min_size=1, max_size=25),
       st.data())
def test_refcount_conservation(tmp_path_factory, nodes, data):
    """Random DAGs under memory pressure: every value is right and nothing leaks."""
    cfg = StoreConfig(memory_limit=8 * KiB, fuse_threshold=2 * KiB,
                      spill_dir=str(tmp_path_factory.mktemp("rc")))
    with start_cluster(2, 2, cfg) as c:
        rt = c.runtime
        rt.register("fill", fill)
        rt.register("concat", concat)
        refs, expect = [], []
        for i, (size, deps) in enumerate(nodes):
            deps = [d % len(refs) for d in deps] if refs else []
            if deps:
                refs.append(rt.call("concat", *[refs[d] for d in deps]))
                expect.append(b"".join(expect[d] for d in deps))
            else:
                refs.append(rt.call("fill", i, size))
                expect.append(fill(i, size))
        order = data.draw(st.permutations(range(len(refs))))
        for k in order[: len(order) // 2]:
            rt.drop_ref(refs[k])
        live = order[len(order) // 2:]
        for k in live:
            assert rt.get(refs[k]) == expect[k]
        for k in live:
            rt.drop_ref(refs[k])
        rt.sleep(10.0)
        assert all(e.refcount == 0 for e in c.store.entries.values())
        assert all(c.store.usage(n) == 0 for n in c.store.nodes)
        assert c.store.spill_files() == []


def test_memory_ceiling_is_sampled_every_event(tmp_path):
    cfg = StoreConfig(memory_limit=16 * KiB, fuse_threshold=4 * KiB, spill_dir=str(tmp_path))
    with start_cluster(2, 2, cfg) as c:
        rt = c.runtime
        rt.register("fill", fill)
        rt.register("concat", concat)
        biggest = [0]
        request = c.store.request

        def watched_request(node_id, size, prio, callback):
            biggest[0] = max(biggest[0], size)
            return request(node_id, size, prio, callback)
        c.store.request = watched_request
        step = c.loop.step
        peak = [0]

        def checked_step():
            step()
            for ns in c.store.nodes.values():
                peak[0] = max(peak[0], ns.memory_bytes())
                assert ns.memory_bytes() <= cfg.memory_limit + biggest[0]
        c.loop.step = checked_step
        leaves = [rt.call("fill", i, 3 * KiB) for i in range(40)]
        pairs = [rt.call("concat", leaves[i], leaves[39 - i]) for i in range(40)]
        assert rt.get(rt.call("concat", *pairs[:4])) == b"".join(
            fill(i, 3 * KiB) + fill(39 - i, 3 * KiB) for i in range(4))
        assert c.metrics()["bytes_spilled"] > 0
        assert peak[0] > 0
