"""Relation-to-stream operators: RStream, IStream and DStream."""

from __future__ import annotations

from typing import NamedTuple, Optional

from .ast import EmitOperator
from .model import Table


class TimestampedTable(NamedTuple):
    table: Table
    time: int


def rstream(current: Table, t: int) -> TimestampedTable:
    return TimestampedTable(current, t)


def istream(current: Table, previous: Table, t: int) -> TimestampedTable:
    """Rows that entered since the previous evaluation."""
    return TimestampedTable(current.difference(previous), t)


def dstream(current: Table, previous: Table, t: int) -> TimestampedTable:
    """Rows that left since the previous evaluation."""
    return TimestampedTable(previous.difference(current), t)


class EmitState:
    """Applies an emit operator across consecutive evaluations.

    IStream and DStream outputs that would be empty are suppressed; RStream
    always produces an element, even an empty one.
    """

    def __init__(self, operator: EmitOperator):
        self.operator = operator
        self.previous: Optional[Table] = None

    def step(self, current: Table, t: int) -> Optional[TimestampedTable]:
        previous = self.previous if self.previous is not None else Table(current.fields)
        self.previous = current
        if self.operator is EmitOperator.SNAPSHOT:
            return rstream(current, t)
        if self.operator is EmitOperator.ON_ENTERING:
            out = istream(current, previous, t)
        else:
            out = dstream(current, previous, t)
        return out if out.table else None
