"""Hypothesis strategies for graphs, tables and streams."""

import random

from hypothesis import strategies as st

from seraph.model import Node, PropertyGraph, Relationship, Table, TimestampedGraph

LABELS = ["A", "B", "C"]
TYPES = ["T", "U"]
KEYS = ["k", "m"]

prop_values = st.one_of(
    st.booleans(),
    st.integers(-(2**63), 2**63 - 1),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=5),
    st.lists(st.integers(-3, 3), min_size=0, max_size=3).map(tuple),
)


def props(keys=KEYS, values=prop_values):
    return st.dictionaries(st.sampled_from(keys), values, max_size=len(keys))


@st.composite
def graphs(draw, max_nodes=6, max_rels=8, node_ids=range(0, 10), rel_ids=range(100, 120),
           shapes=None, keys=KEYS, values=prop_values):
    """A valid graph; ``shapes`` (rel id -> (src, trg, type)) fixes relationship shapes."""
    ids = draw(st.lists(st.sampled_from(list(node_ids)), unique=True, max_size=max_nodes))
    nodes = [
        Node(n, frozenset(draw(st.sets(st.sampled_from(LABELS), max_size=2))), draw(props(keys, values)))
        for n in ids
    ]
    rels = []
    if ids:
        for rid in draw(st.lists(st.sampled_from(list(rel_ids)), unique=True, max_size=max_rels)):
            if shapes is not None:
                src, trg, typ = shapes[rid]
                if src not in ids or trg not in ids:
                    continue
            else:
                src, trg = draw(st.sampled_from(ids)), draw(st.sampled_from(ids))
                typ = draw(st.sampled_from(TYPES))
            rels.append(Relationship(rid, src, trg, typ, draw(props(keys, values))))
    return PropertyGraph(nodes, rels)


@st.composite
def shapes(draw, node_ids=range(0, 8), rel_ids=range(100, 116)):
    """Fixed relationship shapes shared by all graphs of one stream, so they stay consistent."""
    nodes = list(node_ids)
    return {
        r: (draw(st.sampled_from(nodes)), draw(st.sampled_from(nodes)), draw(st.sampled_from(TYPES)))
        for r in rel_ids
    }


@st.composite
def consistent_graphs(draw, n=3, **kw):
    sh = draw(shapes())
    return [draw(graphs(node_ids=range(0, 8), rel_ids=range(100, 116), shapes=sh, **kw)) for _ in range(n)]


@st.composite
def streams(draw, max_events=50, max_gap=5, shared=True, max_nodes=4, max_rels=4, min_events=0):
    """Non-decreasing timestamps; shapes shared so events are mutually consistent."""
    sh = draw(shapes(node_ids=range(0, 10))) if shared else None
    n = draw(st.integers(min_events, max_events))
    t = draw(st.integers(0, 10))
    out = []
    for _ in range(n):
        t += draw(st.integers(0, max_gap))
        g = draw(graphs(max_nodes=max_nodes, max_rels=max_rels, node_ids=range(0, 10),
                        rel_ids=range(100, 116), shapes=sh, values=st.integers(0, 2)))
        out.append(TimestampedGraph(g, t))
    return out


rows = st.tuples(st.sampled_from(["x", "y", "z"]), st.integers(0, 2))


def tables(max_rows=100):
    return st.lists(rows, max_size=max_rows).map(lambda rs: Table(["name", "n"], rs))


def random_stream(rng: random.Random, max_events=50, max_gap=5, max_nodes=10, max_rels=6):
    """Same shape as :func:`streams`, built from a plain RNG so it is cheap to generate."""
    node_ids, rel_ids = range(0, 10), range(100, 116)
    sh = {r: (rng.choice(node_ids), rng.choice(node_ids), rng.choice(TYPES)) for r in rel_ids}

    def some_props():
        return {k: rng.randrange(0, 3) for k in KEYS if rng.random() < 0.4}

    t, out = rng.randrange(0, 11), []
    for _ in range(rng.randrange(0, max_events + 1)):
        t += rng.randrange(0, max_gap + 1)
        ids = rng.sample(node_ids, rng.randrange(0, max_nodes + 1))
        nodes = [Node(n, frozenset(rng.sample(LABELS, rng.randrange(0, 3))), some_props()) for n in ids]
        rels = [Relationship(r, *sh[r], some_props()) for r in rng.sample(rel_ids, rng.randrange(0, max_rels + 1))
                if sh[r][0] in ids and sh[r][1] in ids]
        out.append(TimestampedGraph(PropertyGraph(nodes, rels), t))
    return out


seeded_streams = st.builds(
    lambda seed, gap: random_stream(random.Random(seed), max_gap=gap),
    st.integers(0, 2**32 - 1),
    st.sampled_from([5, 40]),
)
