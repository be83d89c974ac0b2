"""One-shot evaluation of the Cypher subset over a single property graph.

Clauses are functions from tables to tables, applied left to right to the
table holding one empty record.  Rows are plain dicts while a query runs and
become a :class:`Table` at the end.

Matching is relationship-distinct: within one MATCH, a relationship is used
at most once per row, while nodes may repeat.
"""

from __future__ import annotations

import os
from typing import Any, Iterator, Optional

from . import ast
from .ast import Direction
from .errors import EvaluationError
from .model import PropertyGraph, Table
from .parser import column_name
from .values import INT64_MAX, INT64_MIN, NodeRef, Path, RelRef, type_name, value_key

DEFAULT_MAX_VARLEN = int(os.environ.get("SERAPH_MAX_VARLEN", "10"))

Row = dict


class Context:
    """Graph plus evaluation options shared by one query run."""

    __slots__ = ("graph", "max_varlen", "strict")

    def __init__(self, graph: PropertyGraph, max_varlen: Optional[int] = None, strict: bool = False):
        self.graph = graph
        self.max_varlen = DEFAULT_MAX_VARLEN if max_varlen is None else max_varlen
        self.strict = strict

    def type_error(self, msg: str):
        if self.strict:
            raise EvaluationError(msg)
        return None


# -- expressions -------------------------------------------------------------


def _is_number(v) -> bool:
    t = type(v)
    return t is int or t is float


def _check_int(v):
    if type(v) is int and not INT64_MIN <= v <= INT64_MAX:
        raise EvaluationError(f"integer overflow: {v}")
    return v


def cypher_equals(a, b) -> Optional[bool]:
    """Equality with null propagation; numbers compare by value across int and float."""
    if a is None or b is None:
        return None
    if _is_number(a) and _is_number(b):
        return a == b
    ta, tb = type(a), type(b)
    if ta in (tuple, list) and tb in (tuple, list):
        if len(a) != len(b):
            return False
        unknown = False
        for x, y in zip(a, b):
            r = cypher_equals(x, y)
            if r is False:
                return False
            unknown |= r is None
        return None if unknown else True
    if ta is dict and tb is dict:
        if a.keys() != b.keys():
            return False
        unknown = False
        for k in a:
            r = cypher_equals(a[k], b[k])
            if r is False:
                return False
            unknown |= r is None
        return None if unknown else True
    if ta is not tb:
        return False
    return value_key(a) == value_key(b)


def _order(op: str, a, b, ctx: Context) -> Optional[bool]:
    if a is None or b is None:
        return None
    comparable = (
        (_is_number(a) and _is_number(b))
        or (type(a) is str and type(b) is str)
        or (type(a) is bool and type(b) is bool)
    )
    if not comparable:
        return ctx.type_error(f"cannot compare {type_name(a)} {op} {type_name(b)}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _truth(v, ctx: Context, where: str) -> Optional[bool]:
    if v is None or type(v) is bool:
        return v
    return ctx.type_error(f"{where} expects a boolean, got {type_name(v)}")


def _arith(op: str, a, b, ctx: Context):
    if a is None or b is None:
        return None
    if op == "+":
        if type(a) is str and type(b) is str:
            return a + b
        if type(a) in (tuple, list) and type(b) in (tuple, list):
            return tuple(a) + tuple(b)
    if not (_is_number(a) and _is_number(b)):
        return ctx.type_error(f"cannot apply {op} to {type_name(a)} and {type_name(b)}")
    if op == "+":
        return _check_int(a + b)
    if op == "-":
        return _check_int(a - b)
    if op == "*":
        return _check_int(a * b)
    if b == 0:
        return None  # division by zero is null rather than an error
    if type(a) is int and type(b) is int:
        q = abs(a) // abs(b)  # truncate toward zero
        return _check_int(q if (a < 0) == (b < 0) else -q)
    return a / b


def _property(subject, key: str, ctx: Context):
    if subject is None:
        return None
    t = type(subject)
    if t is NodeRef:
        return ctx.graph.nodes[subject.id].props.get(key)
    if t is RelRef:
        return ctx.graph.rels[subject.id].props.get(key)
    if t is dict:
        return subject.get(key)
    return ctx.type_error(f"cannot read property {key!r} of {type_name(subject)}")


def eval_expr(e, row: Row, g: PropertyGraph, strict: bool = False):
    """Value of ``e`` under the bindings in ``row``."""
    return _eval(e, row, Context(g, strict=strict))


def _eval(e, row: Row, ctx: Context) -> Any:
    t = type(e)
    if t is ast.Literal:
        return e.value
    if t is ast.Var:
        try:
            return row[e.name]
        except KeyError:
            raise EvaluationError(f"variable {e.name!r} is not bound") from None
    if t is ast.Prop:
        return _property(_eval(e.subject, row, ctx), e.key, ctx)
    if t is ast.Compare:
        a, b = _eval(e.left, row, ctx), _eval(e.right, row, ctx)
        if e.op == "=":
            return cypher_equals(a, b)
        if e.op == "<>":
            r = cypher_equals(a, b)
            return None if r is None else not r
        return _order(e.op, a, b, ctx)
    if t is ast.BoolOp:
        a = _truth(_eval(e.left, row, ctx), ctx, e.op)
        if e.op == "AND" and a is False:
            return False
        if e.op == "OR" and a is True:
            return True
        b = _truth(_eval(e.right, row, ctx), ctx, e.op)
        if e.op == "AND":
            if b is False:
                return False
            return None if a is None or b is None else True
        if e.op == "OR":
            if b is True:
                return True
            return None if a is None or b is None else False
        return None if a is None or b is None else a != b
    if t is ast.Not:
        v = _truth(_eval(e.operand, row, ctx), ctx, "NOT")
        return None if v is None else not v
    if t is ast.HasLabels:
        v = _eval(e.subject, row, ctx)
        if v is None:
            return None
        if type(v) is not NodeRef:
            return ctx.type_error(f"label test on {type_name(v)}")
        return set(e.labels) <= ctx.graph.nodes[v.id].labels
    if t is ast.IsNull:
        v = _eval(e.operand, row, ctx)
        return (v is not None) if e.negated else (v is None)
    if t is ast.Arith:
        return _arith(e.op, _eval(e.left, row, ctx), _eval(e.right, row, ctx), ctx)
    if t is ast.Neg:
        v = _eval(e.operand, row, ctx)
        if v is None:
            return None
        if not _is_number(v):
            return ctx.type_error(f"cannot negate {type_name(v)}")
        return _check_int(-v)
    if t is ast.ListLit:
        return tuple(_eval(x, row, ctx) for x in e.items)
    if t is ast.MapLit:
        return {k: _eval(x, row, ctx) for k, x in e.items}
    if t is ast.Count:
        raise EvaluationError("COUNT is only allowed as a WITH or RETURN item")
    raise TypeError(f"not an expression: {e!r}")


# -- pattern matching --------------------------------------------------------


def _props_match(items, actual, row: Row, ctx: Context) -> bool:
    for key, expr in items:
        if cypher_equals(actual.get(key), _eval(expr, row, ctx)) is not True:
            return False
    return True


def _bind_node(np: ast.NodePattern, nid: int, row: Row, ctx: Context) -> Optional[Row]:
    """``row`` extended with ``np`` matched to node ``nid``, or None."""
    node = ctx.graph.nodes[nid]
    if np.labels and not node.labels.issuperset(np.labels):
        return None
    if np.var is not None:
        cur = row.get(np.var)
        if cur is not None or np.var in row:
            if cur != NodeRef(nid):
                return None
        else:
            row = {**row, np.var: NodeRef(nid)}
    if np.props and not _props_match(np.props, node.props, row, ctx):
        return None
    return row


def _steps(node: int, rp: ast.RelPattern, ctx: Context, used) -> Iterator[tuple]:
    """Single relationships leaving ``node`` that fit ``rp``: (rel, other end)."""
    g = ctx.graph
    types = rp.types
    if rp.direction is not Direction.LEFT:
        for r in g.out_rels(node):
            if r.id not in used and (not types or r.type in types):
                yield r, r.trg
    if rp.direction is not Direction.RIGHT:
        for r in g.in_rels(node):
            if r.id in used or (types and r.type not in types):
                continue
            if rp.direction is Direction.BOTH and r.src == r.trg:
                continue  # already produced by the outgoing scan
            yield r, r.src


def _expand(start: int, rp: ast.RelPattern, row: Row, ctx: Context, used: frozenset) -> Iterator[tuple]:
    """(end node, [rel ids], [intermediate and end node ids], row) for each way to traverse ``rp``."""
    if rp.hops is None:
        for r, other in _steps(start, rp, ctx, used):
            if rp.props and not _props_match(rp.props, r.props, row, ctx):
                continue
            out = row
            if rp.var is not None:
                if rp.var in row:
                    if row[rp.var] != RelRef(r.id):
                        continue
                else:
                    out = {**row, rp.var: RelRef(r.id)}
            yield other, [r.id], [other], out
        return
    lo, hi = rp.hops
    if hi is None:
        hi = max(lo, ctx.max_varlen)
    rels: list = []
    nodes: list = []

    def dfs(cur: int, taken: frozenset) -> Iterator[tuple]:
        depth = len(rels)
        if depth >= lo:
            yield cur, list(rels), list(nodes), row
        if depth == hi:
            return
        for r, other in _steps(cur, rp, ctx, taken):
            if rp.props and not _props_match(rp.props, r.props, row, ctx):
                continue
            rels.append(r.id)
            nodes.append(other)
            yield from dfs(other, taken | {r.id})
            rels.pop()
            nodes.pop()

    yield from dfs(start, used)


def _reverse(p: ast.Pattern) -> ast.Pattern:
    flip = {Direction.RIGHT: Direction.LEFT, Direction.LEFT: Direction.RIGHT, Direction.BOTH: Direction.BOTH}
    rels = tuple(
        ast.RelPattern(r.var, r.types, flip[r.direction], r.props, r.hops) for r in reversed(p.rels)
    )
    return ast.Pattern(tuple(reversed(p.nodes)), rels, p.path_var)


def _anchor(p: ast.Pattern, row: Row) -> tuple[ast.Pattern, bool]:
    """Start from a bound end node when the first one is free."""
    first, last = p.nodes[0].var, p.nodes[-1].var
    if p.rels and (first is None or first not in row) and last is not None and last in row:
        return _reverse(p), True
    if p.rels and not p.nodes[0].labels and (first is None or first not in row) and p.nodes[-1].labels:
        return _reverse(p), True
    return p, False


def _start_nodes(np: ast.NodePattern, row: Row, ctx: Context) -> list:
    if np.var is not None and np.var in row:
        v = row[np.var]
        return [v.id] if type(v) is NodeRef and v.id in ctx.graph.nodes else []
    if np.labels:
        return ctx.graph.nodes_with_label(np.labels[0])
    return list(ctx.graph.nodes)


def _match_one(p: ast.Pattern, row: Row, ctx: Context, used: frozenset) -> Iterator[tuple]:
    """(row, used) pairs extending ``row`` with one match of ``p``."""
    q, reversed_ = _anchor(p, row)

    def walk(i: int, cur: int, row: Row, used: frozenset, ids: list) -> Iterator[tuple]:
        if i == len(q.rels):
            if q.path_var is not None:
                path = ids[::-1] if reversed_ else ids
                row = {**row, q.path_var: Path(tuple(path))}
            yield row, used
            return
        rp = q.rels[i]
        for end, rels, nodes, row2 in _expand(cur, rp, row, ctx, used):
            row3 = _bind_node(q.nodes[i + 1], end, row2, ctx)
            if row3 is None:
                continue
            more = ids[:]
            for r, n in zip(rels, nodes):
                more += (r, n)
            yield from walk(i + 1, end, row3, used | frozenset(rels), more)

    for nid in _start_nodes(q.nodes[0], row, ctx):
        start = _bind_node(q.nodes[0], nid, row, ctx)
        if start is not None:
            yield from walk(0, nid, start, used, [nid])


def _match_rows(patterns, where, rows: list, ctx: Context) -> list:
    out = []

    def tuple_matches(i: int, row: Row, used: frozenset) -> Iterator[Row]:
        if i == len(patterns):
            yield row
            return
        for row2, used2 in _match_one(patterns[i], row, ctx, used):
            yield from tuple_matches(i + 1, row2, used2)

    for row in rows:
        for r in tuple_matches(0, row, frozenset()):
            if where is None or _truth(_eval(where, r, ctx), ctx, "WHERE") is True:
                out.append(r)
    return out


def match_pattern(patterns, where, g: PropertyGraph, input: Table, *,
                  max_varlen: Optional[int] = None, strict: bool = False) -> Table:
    """Extend every input row with each match of the pattern tuple that passes ``where``."""
    ctx = Context(g, max_varlen, strict)
    rows = _match_rows(tuple(patterns), where, input.rows(), ctx)
    fields = list(input.fields)
    for p in patterns:
        for v in p.variables():
            if v not in fields:
                fields.append(v)
    return Table(fields, rows)


# -- projection --------------------------------------------------------------


def _project(proj: ast.Projection, rows: list, ctx: Context) -> tuple[list, list]:
    """(columns, rows) after evaluating a WITH or RETURN item list."""
    scope = sorted(rows[0]) if rows else None
    items = [(column_name(it), it.expr) for it in proj.items]
    aggregated = any(type(expr) is ast.Count for _, expr in items)

    if not aggregated:
        out = []
        for row in rows:
            new = {k: row[k] for k in (scope or ())} if proj.star else {}
            for name, expr in items:
                new[name] = _eval(expr, row, ctx)
            out.append(new)
    else:
        keys = [(n, e) for n, e in items if type(e) is not ast.Count]
        aggs = [(n, e) for n, e in items if type(e) is ast.Count]
        groups: dict = {}
        for row in rows:
            kv = {n: _eval(e, row, ctx) for n, e in keys}
            gk = tuple(value_key(v) for v in kv.values())
            slot = groups.get(gk)
            if slot is None:
                slot = groups[gk] = (kv, [[] for _ in aggs])
            for acc, (_, e) in zip(slot[1], aggs):
                if e.arg is None:
                    acc.append(1)
                else:
                    v = _eval(e.arg, row, ctx)
                    if v is not None:
                        acc.append(v)
        if not rows and not keys:
            groups[()] = ({}, [[] for _ in aggs])
        out = []
        for kv, accs in groups.values():
            new = dict(kv)
            for acc, (n, e) in zip(accs, aggs):
                new[n] = len({value_key(v) for v in acc}) if e.distinct else len(acc)
            out.append({name: new[name] for name, _ in items})
    if proj.distinct:
        seen = {}
        for r in out:
            seen.setdefault(tuple(value_key(v) for v in r.values()), r)
        out = list(seen.values())
    return [name for name, _ in items], out


def _columns(proj: ast.Projection, scope: list) -> list:
    cols = sorted(scope) if proj.star else []
    return cols + [column_name(it) for it in proj.items]


def project_return(ret: ast.Projection, rows: Table, g: PropertyGraph, *, strict: bool = False) -> Table:
    ctx = Context(g, strict=strict)
    _, out = _project(ret, rows.rows(), ctx)
    return Table(_columns(ret, rows.fields), out)


def evaluate_query(q: ast.CypherQuery, g: PropertyGraph, *,
                   max_varlen: Optional[int] = None, strict: bool = False) -> Table:
    """The query's result table over ``g``, starting from the unit table."""
    ctx = Context(g, max_varlen, strict)
    rows: list = [{}]
    scope: list = []
    for clause in q.clauses:
        if type(clause) is ast.Match:
            rows = _match_rows(clause.patterns, clause.where, rows, ctx)
            for p in clause.patterns:
                for v in p.variables():
                    if v not in scope:
                        scope.append(v)
        else:
            proj = clause.projection
            scope = _columns(proj, scope)
            _, rows = _project(proj, rows, ctx)
            if proj.star:
                rows = [{k: r[k] for k in scope} for r in rows]
            if clause.where is not None:
                rows = [r for r in rows if _truth(_eval(clause.where, r, ctx), ctx, "WHERE") is True]
    columns = _columns(q.ret, scope)
    _, out = _project(q.ret, rows, ctx)
    return Table(columns, out)

