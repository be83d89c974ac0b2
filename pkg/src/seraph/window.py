"""Window contents and evaluation instants.

A time window of width ``a`` at instant ``t`` holds the events with
timestamps in ``(t - a, t]``.  An event window of size ``n`` holds the last
``n`` events with timestamp ``<= t``.  The pure functions here define the
semantics; :class:`WindowState` maintains the same contents incrementally.
"""

from __future__ import annotations

import logging
from collections import deque
from typing import Iterable, Iterator, Optional, Sequence, Union

from .ast import EventCadence, EventWindow, StartKind, TimeCadence, TimeWindow
from .errors import OutOfOrderError
from .model import PropertyGraph, TimestampedGraph, graph_union_all

log = logging.getLogger(__name__)

WindowSpec = Union[TimeWindow, EventWindow]
CadenceSpec = Union[TimeCadence, EventCadence]


def time_window_content(stream: Iterable[TimestampedGraph], t: int, width: int) -> PropertyGraph:
    if width <= 0:
        raise ValueError("window width must be positive")
    return graph_union_all(e for e in stream if t - width < e.time <= t)


def event_window_content(stream: Iterable[TimestampedGraph], t: int, n: int) -> PropertyGraph:
    if n < 1:
        raise ValueError("event window size must be at least 1")
    upto = [e for e in stream if e.time <= t]
    return graph_union_all(upto[-n:])


def window_content(stream: Iterable[TimestampedGraph], t: int, spec: WindowSpec) -> PropertyGraph:
    if isinstance(spec, TimeWindow):
        return time_window_content(stream, t, spec.width)
    return event_window_content(stream, t, spec.count)


def resolve_t0(start: Union[StartKind, int], stream: Sequence[TimestampedGraph]) -> int:
    """First evaluation instant.

    Earliest and Latest both resolve to the first event consumed: a replayed
    source has no history before registration.
    """
    if isinstance(start, StartKind):
        if not stream:
            raise ValueError(f"STARTING FROM {start.value} needs at least one event")
        return stream[0].time
    return start


def in_et(t: int, t0: int, interval: int) -> bool:
    """Whether ``t`` is a time-cadence evaluation instant."""
    return t >= t0 and (t - t0) % interval == 0


def time_instants(t0: int, interval: int, until: int) -> Iterator[int]:
    """Evaluation instants from ``t0`` up to and including ``until``."""
    t = t0
    while t <= until:
        yield t
        t += interval


class EvalSchedule:
    """Decides when a query is evaluated."""

    def __init__(self, t0: int, cadence: CadenceSpec):
        if isinstance(cadence, TimeCadence) and cadence.interval <= 0:
            raise ValueError("cadence interval must be positive")
        if isinstance(cadence, EventCadence) and cadence.count < 1:
            raise ValueError("cadence count must be at least 1")
        self.t0 = t0
        self.cadence = cadence
        self.next_instant = t0  # time cadence only

    @property
    def time_driven(self) -> bool:
        return isinstance(self.cadence, TimeCadence)

    def due_before(self, t: int) -> Iterator[int]:
        """Pending time instants strictly before ``t``, consuming them."""
        while self.next_instant < t:
            tau = self.next_instant
            self.next_instant += self.cadence.interval
            yield tau

    def due_at_or_before(self, t: int) -> Iterator[int]:
        return self.due_before(t + 1)

    def fires_after(self, events_seen: int) -> bool:
        """Event cadence: whether the event just counted triggers an evaluation."""
        return events_seen > 0 and events_seen % self.cadence.count == 0


class WindowState:
    """Buffer of retained events for one query."""

    def __init__(self, spec: WindowSpec, t0: Optional[int] = None):
        if isinstance(spec, TimeWindow) and spec.width <= 0:
            raise ValueError("window width must be positive")
        if isinstance(spec, EventWindow) and spec.count < 1:
            raise ValueError("event window size must be at least 1")
        self.spec = spec
        self.t0 = t0
        maxlen = spec.count if isinstance(spec, EventWindow) else None
        self.buffer: deque = deque(maxlen=maxlen)
        self.events_seen = 0
        self.last_time: Optional[int] = None
        self.last_eval: Optional[int] = None
        self.peak = 0
        self._seq = 0  # sequence number of the next ingested event

    def ingest(self, e: TimestampedGraph) -> None:
        if self.last_time is not None and e.time < self.last_time:
            raise OutOfOrderError(self.last_time, e.time)
        self.last_time = e.time
        self.buffer.append((self._seq, e))
        self._seq += 1
        if self.t0 is not None and e.time >= self.t0:
            self.events_seen += 1
        if len(self.buffer) > self.peak:
            self.peak = len(self.buffer)

    def evict(self, horizon: int) -> None:
        """Drop events that no evaluation at or after ``horizon`` can see."""
        if isinstance(self.spec, TimeWindow):
            cutoff = horizon - self.spec.width
            buf = self.buffer
            while buf and buf[0][1].time <= cutoff:
                buf.popleft()

    def _selected(self, t: int) -> list:
        if isinstance(self.spec, TimeWindow):
            lo = t - self.spec.width
            return [(s, e) for s, e in self.buffer if lo < e.time <= t]
        upto = [(s, e) for s, e in self.buffer if e.time <= t]
        return upto[-self.spec.count:]

    def members(self, t: int) -> list:
        """Ingestion sequence numbers of the events in the window at ``t``."""
        return [s for s, _ in self._selected(t)]

    def content_key(self, t: int) -> tuple:
        """Identifies the set of events in the window at ``t``."""
        sel = self._selected(t)
        return (sel[0][0], sel[-1][0], len(sel)) if sel else ()

    def content(self, t: int) -> PropertyGraph:
        self.last_eval = t
        return graph_union_all(e for _, e in self._selected(t))

    def __len__(self):
        return len(self.buffer)
