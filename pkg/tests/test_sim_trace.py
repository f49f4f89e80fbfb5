import pytest
from hypothesis import given
from hypothesis import strategies as st

from futureshuffle.sim import EventLoop, Lane
from futureshuffle.trace import SchedulerTrace


@given(st.lists(st.floats(0, 100, allow_nan=False), max_size=50))
def test_events_run_in_time_then_submission_order(times):
    loop = EventLoop()
    seen = []
    for i, t in enumerate(times):
        loop.at(t, seen.append, (t, i))
    while loop.step():
        pass
    assert seen == sorted(seen)


def test_cancelled_events_never_run():
    loop = EventLoop()
    seen = []
    ev = loop.after(1.0, seen.append, "a")
    loop.after(2.0, seen.append, "b")
    ev.cancel()
    while loop.step():
        pass
    assert seen == ["b"] and loop.now == 2.0
    loop.at(0.5, seen.append, "past")   # clamped to now
    assert loop.next_time() == 2.0


def test_lane_serializes_work():
    lane = Lane()
    assert lane.reserve(0.0, 1.0) == 1.0
    assert lane.reserve(0.5, 1.0) == 2.0
    assert lane.reserve(5.0, 1.0) == 6.0
    assert lane.reserve(5.0, 1.0, not_before=10.0) == 11.0


def test_trace_round_trip(tmp_path):
    tr = SchedulerTrace()
    tr.emit(0.0, "task_submitted", 1, None, 0, role="map", index=3)
    tr.emit(0.5, "task_started", 1, 2, 0, role="map", index=3)
    with pytest.raises(ValueError):
        tr.emit(1.0, "made_up", 1)
    tr.write_jsonl(tmp_path / "t.jsonl")
    back = SchedulerTrace.read_jsonl(tmp_path / "t.jsonl")
    assert [e.to_dict() for e in back] == [e.to_dict() for e in tr]
    assert tr.count("task_started", role="map") == 1
    assert len(tr.of_kind("task_submitted", "task_started")) == 2
