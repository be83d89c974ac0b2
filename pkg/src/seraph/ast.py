"""Syntax tree for Seraph queries and the embedded Cypher subset."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Optional, Union


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: Any  # None, bool, int, float or str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Prop:
    subject: "Expr"
    key: str


@dataclass(frozen=True)
class HasLabels:
    subject: "Expr"
    labels: tuple


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # AND, OR, XOR
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # = <> < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Arith:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class IsNull:
    operand: "Expr"
    negated: bool = False


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class MapLit:
    items: tuple  # ((key, Expr), ...)


@dataclass(frozen=True)
class Count:
    """COUNT(expr), COUNT(DISTINCT expr) or COUNT(*) when ``arg`` is None."""

    arg: Optional["Expr"]
    distinct: bool = False


Expr = Union[Literal, Var, Prop, HasLabels, Not, Neg, BoolOp, Compare, Arith, IsNull, ListLit, MapLit, Count]


# -- patterns ----------------------------------------------------------------


@dataclass(frozen=True)
class NodePattern:
    var: Optional[str] = None
    labels: tuple = ()
    props: tuple = ()  # ((key, Expr), ...)


class Direction(enum.Enum):
    RIGHT = "->"
    LEFT = "<-"
    BOTH = "--"


@dataclass(frozen=True)
class RelPattern:
    var: Optional[str] = None
    types: tuple = ()
    direction: Direction = Direction.RIGHT
    props: tuple = ()
    # None for a plain single hop; (min, max) with max None for unbounded
    hops: Optional[tuple] = None

    @property
    def variable_length(self) -> bool:
        return self.hops is not None


@dataclass(frozen=True)
class Pattern:
    nodes: tuple  # NodePattern, len(rels) + 1 of them
    rels: tuple = ()
    path_var: Optional[str] = None

    def variables(self) -> list:
        out = [self.path_var] if self.path_var else []
        for i, n in enumerate(self.nodes):
            if n.var:
                out.append(n.var)
            if i < len(self.rels) and self.rels[i].var:
                out.append(self.rels[i].var)
        return out


# -- clauses -----------------------------------------------------------------


@dataclass(frozen=True)
class ReturnItem:
    expr: Expr
    alias: Optional[str] = None


@dataclass(frozen=True)
class Projection:
    items: tuple = ()
    distinct: bool = False
    star: bool = False


@dataclass(frozen=True)
class Match:
    patterns: tuple
    where: Optional[Expr] = None


@dataclass(frozen=True)
class With:
    projection: Projection
    where: Optional[Expr] = None


@dataclass(frozen=True)
class CypherQuery:
    clauses: tuple
    ret: Projection


# -- Seraph wrapper ----------------------------------------------------------


class StartKind(enum.Enum):
    EARLIEST = "Earliest"
    LATEST = "Latest"


@dataclass(frozen=True)
class TimeWindow:
    width: int  # ms


@dataclass(frozen=True)
class EventWindow:
    count: int


@dataclass(frozen=True)
class TimeCadence:
    interval: int  # ms


@dataclass(frozen=True)
class EventCadence:
    count: int


class EmitOperator(enum.Enum):
    SNAPSHOT = "SNAPSHOT"
    ON_ENTERING = "ON ENTERING"
    ON_EXIT = "ON EXIT"

    @property
    def stream_name(self) -> str:
        return {"SNAPSHOT": "RStream", "ON ENTERING": "IStream", "ON EXIT": "DStream"}[self.value]


@dataclass(frozen=True)
class ConstructSpec:
    patterns: tuple


@dataclass(frozen=True)
class SeraphQuery:
    id: str
    source: str
    start: Union[StartKind, int]
    window: Union[TimeWindow, EventWindow]
    inner: CypherQuery
    emit: EmitOperator
    every: Union[TimeCadence, EventCadence]
    sink: str
    construct: Optional[ConstructSpec] = None
