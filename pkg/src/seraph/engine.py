"""Continuous execution of one registered query over an ordered event stream.

The clock is event time.  A pending time-cadence instant fires when the
first event stamped after it arrives, or at end of stream, using the window
as of that instant.  An event-cadence evaluation fires right after the
triggering event, at its timestamp.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Union

from . import ast
from .ast import EmitOperator, EventWindow, StartKind
from .construct import construct
from .cypher import evaluate_query
from .errors import OutOfOrderError
from .model import PropertyGraph, Table, TimestampedGraph
from .streams import EmitState, TimestampedTable
from .window import EvalSchedule, WindowState

log = logging.getLogger(__name__)

Output = Union[TimestampedTable, TimestampedGraph]


@dataclass
class Metrics:
    events: int = 0
    evaluations: int = 0
    emissions: int = 0
    rows_emitted: int = 0
    peak_buffer: int = 0
    eval_seconds: float = 0.0
    max_eval_seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


class Executor:
    """Window, evaluation, emit operator and optional CONSTRUCT for one query."""

    def __init__(self, query: ast.SeraphQuery, *, max_varlen: Optional[int] = None, strict: bool = False):
        self.query = query
        self.max_varlen = max_varlen
        self.strict = strict
        t0 = None if isinstance(query.start, StartKind) else query.start
        self.window = WindowState(query.window, t0)
        self.schedule: Optional[EvalSchedule] = None if t0 is None else EvalSchedule(t0, query.every)
        self.emit = EmitState(query.emit)
        self.metrics = Metrics()
        self._cache_key: Optional[tuple] = None
        self._cache: Optional[tuple[PropertyGraph, Table]] = None

    @property
    def t0(self) -> Optional[int]:
        return None if self.schedule is None else self.schedule.t0

    def push(self, e: TimestampedGraph) -> list[Output]:
        """Ingest one event and return whatever it causes to be emitted."""
        last = self.window.last_time
        if last is not None and e.time < last:
            raise OutOfOrderError(last, e.time)
        if self.schedule is None:
            self.schedule = EvalSchedule(e.time, self.query.every)
            self.window.t0 = e.time
        out: list[Output] = []
        if self.schedule.time_driven:
            while self.schedule.next_instant < e.time:
                tau = self.schedule.next_instant
                self.schedule.next_instant += self.schedule.cadence.interval
                out += self._evaluate(tau)
                self._fast_forward(tau, e.time)
        self.window.ingest(e)
        self.metrics.events += 1
        if not self.schedule.time_driven and e.time >= self.schedule.t0 \
                and self.schedule.fires_after(self.window.events_seen):
            out += self._evaluate(e.time)
        self._evict()
        self.metrics.peak_buffer = max(self.metrics.peak_buffer, self.window.peak)
        return out

    def finish(self) -> list[Output]:
        """End of stream: fire pending time instants up to the last timestamp."""
        if self.schedule is None:
            if isinstance(self.query.start, StartKind):
                log.warning("query %s: stream ended with no events; nothing to evaluate", self.query.id)
            return []
        out: list[Output] = []
        last = self.window.last_time
        if self.schedule.time_driven and last is not None:
            for tau in self.schedule.due_at_or_before(last):
                out += self._evaluate(tau)
        return out

    def run(self, events: Iterable[TimestampedGraph]) -> list[Output]:
        out: list[Output] = []
        for e in events:
            out += self.push(e)
        return out + self.finish()

    # -- internals

    def _horizon(self) -> int:
        """No future evaluation happens before this instant."""
        if self.schedule.time_driven:
            return self.schedule.next_instant
        last = self.window.last_time
        return self.schedule.t0 if last is None else max(last, self.schedule.t0)

    def _evict(self) -> None:
        self.window.evict(self._horizon())

    def _fast_forward(self, tau: int, until: int) -> None:
        """Skip instants before ``until`` whose window equals the one just evaluated.

        Only safe when identical consecutive tables produce no output, so
        SNAPSHOT queries never skip.
        """
        if self.query.emit is EmitOperator.SNAPSHOT:
            return
        sched = self.schedule
        last = self.window.last_time
        if last is not None and tau < last:
            return  # some buffered event has not entered the window yet
        if self.window.content_key(sched.next_instant) != self._cache_key:
            return
        target = until
        buf = self.window.buffer
        if buf and not isinstance(self.query.window, EventWindow):
            target = min(target, buf[0][1].time + self.query.window.width)
        step = sched.cadence.interval
        if target > sched.next_instant:
            k = -(-(target - sched.next_instant) // step)
            sched.next_instant += k * step

    def _evaluate(self, t: int) -> list[Output]:
        started = time.perf_counter()
        key = self.window.content_key(t)
        if key == self._cache_key and self._cache is not None:
            graph, table = self._cache
        else:
            graph = self.window.content(t)
            table = evaluate_query(self.query.inner, graph, max_varlen=self.max_varlen, strict=self.strict)
            self._cache_key, self._cache = key, (graph, table)
        emitted = self.emit.step(table, t)
        elapsed = time.perf_counter() - started
        m = self.metrics
        m.evaluations += 1
        m.eval_seconds += elapsed
        m.max_eval_seconds = max(m.max_eval_seconds, elapsed)
        if self.schedule.time_driven:
            self._evict()
        if emitted is None:
            return []
        result: Output = emitted
        if self.query.construct is not None:
            result = construct(self.query.construct, emitted.table, graph, t, self.query.id)
            if not result.graph and self.query.emit is not EmitOperator.SNAPSHOT:
                return []
            m.rows_emitted += len(result.graph.rels)
        else:
            m.rows_emitted += len(emitted.table)
        m.emissions += 1
        return [result]


def run_query(query: ast.SeraphQuery, events: Iterable[TimestampedGraph], **options) -> list[Output]:
    """Replay ``events`` through a fresh executor."""
    return Executor(query, **options).run(events)
