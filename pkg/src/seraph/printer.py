"""Canonical text for syntax trees.

Printing then parsing gives back an equal tree.  Binary operators are fully
parenthesized so precedence never has to be reconstructed.
"""

from __future__ import annotations

import math
import re

from . import ast
from .ast import Direction
from .timeutil import format_duration, format_instant

_PLAIN_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _name(s: str) -> str:
    from .parser import RESERVED

    if _PLAIN_NAME.fullmatch(s) and s.upper() not in RESERVED and s not in ("CONSTRUCT", "EMIT"):
        return s
    return "`" + s + "`"


def _key(s: str) -> str:
    return s if _PLAIN_NAME.fullmatch(s) else "`" + s + "`"


def _string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace("'", "\\'")
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return "'" + out + "'"


def _literal(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"no literal syntax for {v!r}")
        return repr(v)
    if isinstance(v, str):
        return _string(v)
    raise TypeError(f"not a literal: {v!r}")


def _map(items) -> str:
    return "{" + ", ".join(f"{_key(k)}: {print_expr(e)}" for k, e in items) + "}"


def print_expr(e) -> str:
    if isinstance(e, ast.Literal):
        return _literal(e.value)
    if isinstance(e, ast.Var):
        return _name(e.name)
    if isinstance(e, ast.Prop):
        return f"{print_expr(e.subject)}.{_key(e.key)}"
    if isinstance(e, ast.HasLabels):
        return print_expr(e.subject) + "".join(":" + _key(lab) for lab in e.labels)
    if isinstance(e, ast.Not):
        return f"(NOT {print_expr(e.operand)})"
    if isinstance(e, ast.Neg):
        return f"-({print_expr(e.operand)})"
    if isinstance(e, (ast.BoolOp, ast.Compare, ast.Arith)):
        return f"({print_expr(e.left)} {e.op} {print_expr(e.right)})"
    if isinstance(e, ast.IsNull):
        return f"({print_expr(e.operand)} IS {'NOT ' if e.negated else ''}NULL)"
    if isinstance(e, ast.ListLit):
        return "[" + ", ".join(print_expr(x) for x in e.items) + "]"
    if isinstance(e, ast.MapLit):
        return _map(e.items)
    if isinstance(e, ast.Count):
        if e.arg is None:
            return "COUNT(*)"
        return f"COUNT({'DISTINCT ' if e.distinct else ''}{print_expr(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _node(n: ast.NodePattern) -> str:
    out = _name(n.var) if n.var else ""
    out += "".join(":" + _key(lab) for lab in n.labels)
    if n.props:
        out += (" " if out else "") + _map(n.props)
    return "(" + out + ")"


def _rel(r: ast.RelPattern) -> str:
    body = _name(r.var) if r.var else ""
    if r.types:
        body += ":" + "|".join(_key(t) for t in r.types)
    if r.hops is not None:
        lo, hi = r.hops
        if hi is None:
            body += "*" if lo == 1 else f"*{lo}.."
        elif lo == hi:
            body += f"*{lo}"
        else:
            body += f"*{lo}..{hi}"
    if r.props:
        body += (" " if body else "") + _map(r.props)
    mid = f"[{body}]" if body else ""
    left = "<" if r.direction is Direction.LEFT else ""
    right = ">" if r.direction is Direction.RIGHT else ""
    return f"{left}-{mid}-{right}"


def print_pattern(p: ast.Pattern) -> str:
    out = _node(p.nodes[0])
    for r, n in zip(p.rels, p.nodes[1:]):
        out += _rel(r) + _node(n)
    if p.path_var:
        out = f"{_name(p.path_var)} = {out}"
    return out


def _patterns(ps) -> str:
    return ", ".join(print_pattern(p) for p in ps)


def _projection(proj: ast.Projection) -> str:
    parts = ["*"] if proj.star else []
    for item in proj.items:
        text = print_expr(item.expr)
        if item.alias is not None:
            text += f" AS {_name(item.alias)}"
        parts.append(text)
    return ("DISTINCT " if proj.distinct else "") + ", ".join(parts)


def _clauses(q: ast.CypherQuery) -> list:
    lines = []
    for c in q.clauses:
        if isinstance(c, ast.Match):
            lines.append(f"MATCH {_patterns(c.patterns)}")
        else:
            lines.append(f"WITH {_projection(c.projection)}")
        if c.where is not None:
            lines.append(f"WHERE {print_expr(c.where)}")
    return lines


def print_cypher(q: ast.CypherQuery) -> str:
    return "\n".join(_clauses(q) + [f"RETURN {_projection(q.ret)}"])


def _range(spec) -> str:
    if isinstance(spec, (ast.TimeWindow, ast.TimeCadence)):
        return format_duration(spec.width if isinstance(spec, ast.TimeWindow) else spec.interval)
    n = spec.count
    return "1 Event" if n == 1 else f"{n} Events"


def print_seraph(q: ast.SeraphQuery) -> str:
    start = q.start.value if isinstance(q.start, ast.StartKind) else format_instant(q.start)
    lines = [
        f"REGISTER QUERY {_name(q.id)} {{",
        f"  FROM STREAM {q.source}",
        f"  STARTING FROM {start}",
        f"  WITH WINDOW RANGE {_range(q.window)}",
    ]
    inner = _clauses(q.inner)
    # an implicit RETURN * before CONSTRUCT is left implicit
    implicit = q.construct is not None and q.inner.ret == ast.Projection(star=True)
    if not implicit:
        inner.append(f"RETURN {_projection(q.inner.ret)}")
    lines += ["  " + s for s in inner]
    if q.construct is not None:
        lines.append(f"  CONSTRUCT CREATE {_patterns(q.construct.patterns)}")
        lines.append("  RETURN GRAPH")
    lines.append(f"  EMIT {q.emit.value} EVERY {_range(q.every)}")
    lines.append(f"  INTO {q.sink}")
    lines.append("}")
    return "\n".join(lines)
