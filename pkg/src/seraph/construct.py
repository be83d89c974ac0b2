"""CONSTRUCT CREATE ... RETURN GRAPH: building output graphs from bindings.

Created elements get ids hashed from the query id, the evaluation time, the
canonical row and the position in the create patterns, so replaying a stream
reproduces the same graphs byte for byte.
"""

from __future__ import annotations

import hashlib
import json

from . import ast
from .ast import Direction
from .cypher import eval_expr
from .errors import ConstructError
from .model import EMPTY_GRAPH, Node, PropertyGraph, Relationship, Table, TimestampedGraph
from .values import NodeRef, to_json, type_name


def fresh_id(*parts) -> int:
    text = json.dumps(parts, separators=(",", ":"), sort_keys=True, ensure_ascii=False)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def _canonical_row(row: dict) -> list:
    return [[k, to_json(row[k])] for k in sorted(row)]


def _literal_props(items) -> dict:
    props = {}
    for key, expr in items:
        v = eval_expr(expr, {}, EMPTY_GRAPH)
        if v is not None:
            props[key] = v
    return props


def construct(spec: ast.ConstructSpec, rows: Table, source: PropertyGraph, t: int,
              query_id: str = "") -> TimestampedGraph:
    """Graph holding one instance of the create patterns per distinct row.

    Rows that would create a relationship from a node to itself are skipped.
    """
    nodes: dict[int, Node] = {}
    rels: dict[int, Relationship] = {}

    def claim(table: dict, new, taken_by_source: bool):
        old = table.get(new.id)
        if taken_by_source or (old is not None and old != new):
            raise ConstructError(f"fresh id {new.id} collides with an existing element")
        table[new.id] = new

    for row, _ in rows.distinct().items():
        key = _canonical_row(row)
        ends: list[list[int]] = []
        fresh: list[Node] = []
        for pi, pattern in enumerate(spec.patterns):
            ids = []
            for ni, np in enumerate(pattern.nodes):
                if np.var is None:
                    nid = fresh_id(query_id, t, key, pi, "node", ni)
                    fresh.append(Node(nid, frozenset(np.labels), _literal_props(np.props)))
                    ids.append(nid)
                    continue
                if np.var not in row:
                    raise ConstructError(f"variable {np.var!r} is not bound")
                v = row[np.var]
                if type(v) is not NodeRef or v.id not in source.nodes:
                    raise ConstructError(f"{np.var!r} is bound to {type_name(v)}, not a node")
                ids.append(v.id)
            ends.append(ids)
        if any(ids[i] == ids[i + 1] for ids in ends for i in range(len(ids) - 1)):
            continue
        for n in fresh:
            claim(nodes, n, n.id in source.nodes or n.id in source.rels)
        for pi, (pattern, ids) in enumerate(zip(spec.patterns, ends)):
            for np, nid in zip(pattern.nodes, ids):
                if np.var is not None:
                    nodes[nid] = source.nodes[nid]
            for ri, rp in enumerate(pattern.rels):
                a, b = ids[ri], ids[ri + 1]
                if rp.direction is Direction.LEFT:
                    a, b = b, a
                rid = fresh_id(query_id, t, key, pi, "rel", ri)
                r = Relationship(rid, a, b, rp.types[0], _literal_props(rp.props))
                claim(rels, r, rid in source.rels or rid in source.nodes)
    for nid in nodes:
        if nid in rels:
            raise ConstructError(f"fresh id {nid} used for both a node and a relationship")
    return TimestampedGraph(PropertyGraph._trusted(nodes, rels), t)
