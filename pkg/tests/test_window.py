import pytest

import ppth
from seraph.ast import EventCadence, EventWindow, StartKind, TimeCadence, TimeWindow
from seraph.errors import OutOfOrderError
from seraph.model import EMPTY_GRAPH, PropertyGraph, TimestampedGraph, graph_union_all, node
from seraph.timeutil import parse_datetime, parse_duration
from seraph.window import (
    EvalSchedule,
    WindowState,
    event_window_content,
    in_et,
    resolve_t0,
    time_instants,
    time_window_content,
)

FOUR_HOURS = parse_duration("PT4H")
ADM, TST, MEET = ppth.EVENTS


def test_time_window_at_0928():
    assert time_window_content(ppth.EVENTS, ppth.at("09:28"), FOUR_HOURS) == graph_union_all([ADM, TST])


def test_time_window_at_0936():
    assert time_window_content(ppth.EVENTS, ppth.at("09:36"), FOUR_HOURS) == graph_union_all(ppth.EVENTS)


def test_time_window_is_open_on_the_left():
    stream = [TimestampedGraph(PropertyGraph([node(1)]), 10), TimestampedGraph(PropertyGraph([node(2)]), 15)]
    assert sorted(time_window_content(stream, 15, 5).nodes) == [2]
    assert sorted(time_window_content(stream, 15, 6).nodes) == [1, 2]
    assert time_window_content(stream, 9, 5) == EMPTY_GRAPH


def test_event_windows():
    t = ppth.at("09:36")
    assert event_window_content(ppth.EVENTS, t, 1) == MEET.graph
    assert event_window_content(ppth.EVENTS, t, 2) == graph_union_all([TST, MEET])
    assert event_window_content(ppth.EVENTS[:2], t, 5) == graph_union_all([ADM, TST])
    assert event_window_content(ppth.EVENTS, ppth.at("09:30"), 1) == TST.graph


@pytest.mark.parametrize("bad", [0, -1])
def test_window_parameters_must_be_positive(bad):
    with pytest.raises(ValueError):
        time_window_content(ppth.EVENTS, 0, bad)
    with pytest.raises(ValueError):
        event_window_content(ppth.EVENTS, 0, bad)


def test_resolve_t0():
    assert resolve_t0(StartKind.LATEST, ppth.EVENTS) == ppth.at("09:12")
    assert resolve_t0(StartKind.EARLIEST, ppth.EVENTS) == ppth.at("09:12")
    explicit = parse_datetime("2021-03-01T09:00:00Z")
    assert resolve_t0(explicit, ppth.EVENTS) == explicit
    with pytest.raises(ValueError):
        resolve_t0(StartKind.EARLIEST, [])


def test_time_cadence_instants():
    t0, five = ppth.at("09:12"), parse_duration("PT5M")
    assert list(time_instants(t0, five, ppth.at("09:22"))) == [ppth.at("09:12"), ppth.at("09:17"), ppth.at("09:22")]
    assert in_et(ppth.at("09:17"), t0, five)
    assert not in_et(ppth.at("09:18"), t0, five)
    assert not in_et(ppth.at("09:07"), t0, five)


def test_schedule_consumes_due_instants():
    s = EvalSchedule(0, TimeCadence(10))
    assert list(s.due_before(25)) == [0, 10, 20]
    assert list(s.due_before(25)) == []
    assert list(s.due_at_or_before(30)) == [30]


@pytest.mark.parametrize("n, fired", [(1, ["09:12", "09:28", "09:36"]), (2, ["09:28"]), (3, ["09:36"])])
def test_event_cadence_over_ppth(n, fired):
    s = EvalSchedule(ppth.at("09:12"), EventCadence(n))
    state = WindowState(TimeWindow(FOUR_HOURS), s.t0)
    times = []
    for e in ppth.EVENTS:
        state.ingest(e)
        if s.fires_after(state.events_seen):
            times.append(e.time)
    assert times == [ppth.at(x) for x in fired]


def test_ingest_keeps_everything_within_four_hours():
    state = WindowState(TimeWindow(FOUR_HOURS), ppth.at("09:12"))
    for e in ppth.EVENTS:
        state.ingest(e)
    state.evict(ppth.at("09:36"))
    assert len(state) == 3
    assert state.content(ppth.at("09:36")) == graph_union_all(ppth.EVENTS)


def test_event_window_buffer_is_bounded():
    state = WindowState(EventWindow(1), 0)
    for e in ppth.EVENTS:
        state.ingest(e)
        assert len(state) == 1
    assert state.peak == 1


def test_eviction_drops_expired_events():
    state = WindowState(TimeWindow(10), 0)
    for t in (0, 5, 10, 15):
        state.ingest(TimestampedGraph(EMPTY_GRAPH, t))
    state.evict(15)
    assert [e.time for _, e in state.buffer] == [10, 15]
    assert state.members(15) == [2, 3]


def test_out_of_order_event_is_rejected():
    state = WindowState(TimeWindow(10), 0)
    state.ingest(TimestampedGraph(EMPTY_GRAPH, 20))
    with pytest.raises(OutOfOrderError) as info:
        state.ingest(TimestampedGraph(EMPTY_GRAPH, 19))
    assert "19" in str(info.value) and "20" in str(info.value)


def test_events_before_t0_are_not_counted():
    state = WindowState(TimeWindow(10), 5)
    for t in (1, 5, 6):
        state.ingest(TimestampedGraph(EMPTY_GRAPH, t))
    assert state.events_seen == 2


def test_empty_window_is_the_empty_graph():
    assert WindowState(TimeWindow(10), 0).content(100) == EMPTY_GRAPH
