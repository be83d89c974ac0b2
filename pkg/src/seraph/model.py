"""Property graphs, timestamped graphs and tables (bags of records)."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Mapping
from typing import Any, NamedTuple

from .errors import GraphError, SchemaError
from .values import value_key

log = logging.getLogger(__name__)

ID_MAX = 2**64 - 1


class Node(NamedTuple):
    id: int
    labels: frozenset
    props: Mapping[str, Any]


class Relationship(NamedTuple):
    id: int
    src: int
    trg: int
    type: str
    props: Mapping[str, Any]


def node(id: int, *labels: str, **props) -> Node:
    return Node(id, frozenset(labels), props)


def rel(id: int, src: int, trg: int, type: str, **props) -> Relationship:
    return Relationship(id, src, trg, type, props)


def _check_id(x, what):
    if type(x) is not int or not 0 <= x <= ID_MAX:
        raise GraphError(f"{what} id must be an unsigned 64-bit integer, got {x!r}")


def _check_props(owner, props):
    for k, v in props.items():
        if not isinstance(k, str):
            raise GraphError(f"property key {k!r} of {owner} is not a string")
        if v is None:
            raise GraphError(f"property {k!r} of {owner} is null")
        value_key(v)  # raises TypeError on foreign objects


class PropertyGraph:
    """Immutable property graph.

    ``nodes`` maps node id to :class:`Node`, ``rels`` maps relationship id to
    :class:`Relationship`.  Adjacency and label indexes are built on first use.
    """

    __slots__ = ("nodes", "rels", "_out", "_in", "_by_label")

    def __init__(self, nodes: Iterable[Node] = (), rels: Iterable[Relationship] = ()):
        node_map: dict[int, Node] = {}
        for n in nodes:
            _check_id(n.id, "node")
            if not isinstance(n.labels, frozenset):
                n = n._replace(labels=frozenset(n.labels))
            _check_props(f"node {n.id}", n.props)
            prev = node_map.get(n.id)
            if prev is not None and prev != n:
                raise GraphError(f"node {n.id} given twice with different content")
            node_map[n.id] = n
        rel_map: dict[int, Relationship] = {}
        for r in rels:
            _check_id(r.id, "relationship")
            if r.id in node_map:
                raise GraphError(f"id {r.id} is used by both a node and a relationship")
            if r.src not in node_map or r.trg not in node_map:
                raise GraphError(f"relationship {r.id} has an endpoint outside the graph")
            if not isinstance(r.type, str) or not r.type:
                raise GraphError(f"relationship {r.id} needs a type")
            _check_props(f"relationship {r.id}", r.props)
            prev = rel_map.get(r.id)
            if prev is not None and prev != r:
                raise GraphError(f"relationship {r.id} given twice with different content")
            rel_map[r.id] = r
        self.nodes = node_map
        self.rels = rel_map
        self._out = self._in = self._by_label = None

    @classmethod
    def _trusted(cls, nodes: dict, rels: dict) -> "PropertyGraph":
        g = cls.__new__(cls)
        g.nodes = nodes
        g.rels = rels
        g._out = g._in = g._by_label = None
        return g

    def __len__(self):
        return len(self.nodes) + len(self.rels)

    def is_empty(self) -> bool:
        return not self.nodes and not self.rels

    def labels(self, n: int) -> frozenset:
        return self.nodes[n].labels

    def reltype(self, r: int) -> str:
        return self.rels[r].type

    def src(self, r: int) -> int:
        return self.rels[r].src

    def trg(self, r: int) -> int:
        return self.rels[r].trg

    def props(self, x: int) -> Mapping[str, Any]:
        el = self.nodes.get(x) or self.rels.get(x)
        if el is None:
            raise KeyError(x)
        return el.props

    def _index(self):
        out: dict[int, list] = {n: [] for n in self.nodes}
        inc: dict[int, list] = {n: [] for n in self.nodes}
        for r in self.rels.values():
            out[r.src].append(r)
            inc[r.trg].append(r)
        self._out, self._in = out, inc

    def out_rels(self, n: int) -> list:
        if self._out is None:
            self._index()
        return self._out[n]

    def in_rels(self, n: int) -> list:
        if self._in is None:
            self._index()
        return self._in[n]

    def nodes_with_label(self, label: str) -> list:
        if self._by_label is None:
            idx: dict[str, list] = {}
            for n in self.nodes.values():
                for lab in n.labels:
                    idx.setdefault(lab, []).append(n.id)
            self._by_label = idx
        return self._by_label.get(label, [])

    def canonical(self) -> tuple:
        nodes = tuple(
            (n.id, tuple(sorted(n.labels)), _props_key(n.props))
            for n in sorted(self.nodes.values())
        )
        rels = tuple(
            (r.id, r.src, r.trg, r.type, _props_key(r.props))
            for r in sorted(self.rels.values(), key=lambda r: r.id)
        )
        return nodes, rels

    def __eq__(self, other):
        if not isinstance(other, PropertyGraph):
            return NotImplemented
        return self.canonical() == other.canonical()

    __hash__ = None

    def __repr__(self):
        return f"PropertyGraph(nodes={len(self.nodes)}, rels={len(self.rels)})"


def _props_key(props):
    return tuple(sorted((k, value_key(v)) for k, v in props.items()))


EMPTY_GRAPH = PropertyGraph()


class TimestampedGraph(NamedTuple):
    graph: PropertyGraph
    time: int  # epoch milliseconds


# -- graph algebra -----------------------------------------------------------


def _clash(nodes: Mapping, rels: Mapping, g: PropertyGraph) -> bool:
    """True when ``g`` cannot be merged into the graph given by ``nodes``/``rels``."""
    small, big = (g.rels, rels) if len(g.rels) <= len(rels) else (rels, g.rels)
    for rid in small:
        other = big.get(rid)
        if other is not None:
            mine = small[rid]
            if mine.src != other.src or mine.trg != other.trg or mine.type != other.type:
                return True
    # the two id spaces are disjoint, so an id may not switch kind across graphs
    if not nodes.keys().isdisjoint(g.rels.keys()) or not rels.keys().isdisjoint(g.nodes.keys()):
        return True
    return False


def graphs_consistent(g1: PropertyGraph, g2: PropertyGraph) -> bool:
    """Shared relationships agree on source, target and type."""
    return not _clash(g1.nodes, g1.rels, g2)


def _merge_into(nodes: dict, rels: dict, g: PropertyGraph) -> None:
    for nid, n in g.nodes.items():
        cur = nodes.get(nid)
        if cur is None:
            nodes[nid] = n
        elif cur is not n:
            labels = cur.labels | n.labels
            props = {**cur.props, **n.props} if n.props else cur.props
            nodes[nid] = Node(nid, labels, props)
    for rid, r in g.rels.items():
        cur = rels.get(rid)
        if cur is None:
            rels[rid] = r
        elif cur is not r and r.props:
            rels[rid] = r._replace(props={**cur.props, **r.props})


def graph_union(g1: PropertyGraph, g2: PropertyGraph) -> PropertyGraph:
    """Union under the unique name assumption.

    Inconsistent inputs give the empty graph.  A property defined on both
    sides takes the value from ``g2``.
    """
    if _clash(g1.nodes, g1.rels, g2):
        log.warning("union of inconsistent graphs; result is the empty graph")
        return EMPTY_GRAPH
    nodes = dict(g1.nodes)
    rels = dict(g1.rels)
    _merge_into(nodes, rels, g2)
    return PropertyGraph._trusted(nodes, rels)


def graph_union_all(graphs: Iterable) -> PropertyGraph:
    """Left fold of :func:`graph_union` over graphs in stream order.

    Accepts :class:`TimestampedGraph` items or bare graphs.  The fold mutates
    one accumulator instead of copying at every step.
    """
    nodes: dict = {}
    rels: dict = {}
    for item in graphs:
        g = item.graph if isinstance(item, TimestampedGraph) else item
        if _clash(nodes, rels, g):
            log.warning("inconsistent event in window; accumulated graph reset to empty")
            nodes, rels = {}, {}
            continue
        _merge_into(nodes, rels, g)
    if not nodes and not rels:
        return EMPTY_GRAPH
    return PropertyGraph._trusted(nodes, rels)


# -- tables ------------------------------------------------------------------


def _row_key(row: tuple) -> tuple:
    return tuple(value_key(v) for v in row)


class Table:
    """A bag of records sharing one field set.

    ``fields`` keeps the column order for presentation; equality and the bag
    operations only care about the set of fields.
    """

    __slots__ = ("fields", "_bag")

    def __init__(self, fields: Iterable[str], rows: Iterable = ()):
        self.fields = tuple(fields)
        if len(set(self.fields)) != len(self.fields):
            raise SchemaError(f"duplicate field names in {self.fields}")
        self._bag: dict[tuple, list] = {}
        for row in rows:
            self._add(self._as_tuple(row), 1)

    @classmethod
    def from_counts(cls, fields: Iterable[str], pairs: Iterable[tuple]) -> "Table":
        t = cls(fields)
        for row, n in pairs:
            if n < 0:
                raise ValueError("negative multiplicity")
            if n:
                t._add(t._as_tuple(row), n)
        return t

    @classmethod
    def unit(cls) -> "Table":
        """The table holding a single empty record."""
        return cls((), [()])

    def _as_tuple(self, row) -> tuple:
        if isinstance(row, Mapping):
            if len(row) != len(self.fields) or any(f not in row for f in self.fields):
                raise SchemaError(f"record fields {sorted(row)} differ from table fields {sorted(self.fields)}")
            return tuple(row[f] for f in self.fields)
        row = tuple(row)
        if len(row) != len(self.fields):
            raise SchemaError(f"row of width {len(row)} in a table with {len(self.fields)} fields")
        return row

    def _add(self, row: tuple, n: int) -> None:
        key = _row_key(row)
        slot = self._bag.get(key)
        if slot is None:
            self._bag[key] = [row, n]
        else:
            slot[1] += n

    def _aligned_bag(self, other: "Table") -> dict:
        if set(other.fields) != set(self.fields):
            raise SchemaError(f"incompatible tables: {sorted(self.fields)} vs {sorted(other.fields)}")
        if other.fields == self.fields:
            return other._bag
        pos = [other.fields.index(f) for f in self.fields]
        out: dict = {}
        for key, (row, n) in other._bag.items():
            row = tuple(row[i] for i in pos)
            out[tuple(key[i] for i in pos)] = [row, n]
        return out

    def __len__(self):
        return sum(n for _, n in self._bag.values())

    def __bool__(self):
        return bool(self._bag)

    def distinct_count(self) -> int:
        return len(self._bag)

    def multiplicity(self, row) -> int:
        slot = self._bag.get(_row_key(self._as_tuple(row)))
        return slot[1] if slot else 0

    def counts(self) -> Iterator[tuple[tuple, int]]:
        """(row tuple, multiplicity) pairs in canonical order."""
        for key in sorted(self._bag):
            row, n = self._bag[key]
            yield row, n

    def items(self) -> Iterator[tuple[dict, int]]:
        for row, n in self.counts():
            yield dict(zip(self.fields, row)), n

    def tuples(self) -> list[tuple]:
        return [row for row, n in self.counts() for _ in range(n)]

    def rows(self) -> list[dict]:
        return [dict(zip(self.fields, row)) for row in self.tuples()]

    def __iter__(self):
        return iter(self.rows())

    def __eq__(self, other):
        if not isinstance(other, Table):
            return NotImplemented
        if set(self.fields) != set(other.fields):
            return False
        theirs = self._aligned_bag(other)
        if len(theirs) != len(self._bag):
            return False
        return all(k in theirs and theirs[k][1] == n for k, (_, n) in self._bag.items())

    __hash__ = None

    def __repr__(self):
        return f"Table({list(self.fields)}, {self.rows()!r})"

    def reordered(self, fields: Iterable[str]) -> "Table":
        t = Table(fields)
        t._bag = {k: [r, n] for k, (r, n) in t._aligned_bag(self).items()}
        return t

    # bag algebra

    def difference(self, other: "Table") -> "Table":
        theirs = self._aligned_bag(other)
        out = Table(self.fields)
        for key, (row, n) in self._bag.items():
            slot = theirs.get(key)
            left = n - (slot[1] if slot else 0)
            if left > 0:
                out._bag[key] = [row, left]
        return out

    def union_all(self, other: "Table") -> "Table":
        out = Table(self.fields)
        out._bag = {k: [r, n] for k, (r, n) in self._bag.items()}
        for key, (row, n) in self._aligned_bag(other).items():
            slot = out._bag.get(key)
            if slot is None:
                out._bag[key] = [row, n]
            else:
                slot[1] += n
        return out

    def intersection(self, other: "Table") -> "Table":
        theirs = self._aligned_bag(other)
        out = Table(self.fields)
        for key, (row, n) in self._bag.items():
            slot = theirs.get(key)
            if slot:
                out._bag[key] = [row, min(n, slot[1])]
        return out

    def distinct(self) -> "Table":
        out = Table(self.fields)
        out._bag = {k: [r, 1] for k, (r, _) in self._bag.items()}
        return out


def bag_difference(t1: Table, t2: Table) -> Table:
    """Multiplicity of each record is max(0, m1 - m2)."""
    return t1.difference(t2)


def table_distinct(t: Table) -> Table:
    return t.distinct()
