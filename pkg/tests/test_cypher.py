from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ppth
from seraph import ast
from seraph.cypher import eval_expr, evaluate_query, match_pattern, project_return
from seraph.errors import EvaluationError
from seraph.model import EMPTY_GRAPH, PropertyGraph, Table, graph_union, node, rel
from seraph.parser import parse_cypher_subset
from seraph.values import NodeRef, Path, RelRef
from strategies import TYPES, graphs, shapes

TRACED_ROWS = Table(["p.name", "v.name"], [("Chase", "Norovirus"), ("House", "Norovirus"), ("Allison", "Norovirus")])


def run(text, g, **kw):
    return evaluate_query(parse_cypher_subset(text), g, **kw)


def patterns_of(text):
    return parse_cypher_subset(text + " RETURN *").clauses[0].patterns


def test_hospital_query_finds_three_contacts(ppth_graph):
    assert run(ppth.CYPHER_QUERY, ppth_graph) == TRACED_ROWS


def test_without_distinct_allison_is_reached_more_than_once(ppth_graph):
    out = run(ppth.CYPHER_QUERY.replace("DISTINCT ", ""), ppth_graph)
    assert out.multiplicity(("Allison", "Norovirus")) > 1
    assert out.distinct() == TRACED_ROWS


def test_match_over_empty_graph():
    assert len(run("MATCH (a) RETURN a", EMPTY_GRAPH)) == 0
    assert len(run("MATCH (a)-[r]->(b) RETURN a, b", EMPTY_GRAPH)) == 0


@pytest.mark.parametrize("k", [0, 1, 5])
def test_count_observations(k):
    g = PropertyGraph([node(i, "Observation") for i in range(k)] + [node(100, "Sensor")])
    assert run("MATCH (o:Observation) RETURN COUNT(o) AS c", g) == Table(["c"], [(k,)])


def test_positive_test_edge_in_the_0928_window():
    g = graph_union(ppth.ADMINISTERS.graph, ppth.TESTED_FOR.graph)
    out = match_pattern(patterns_of("MATCH (i:Patient)-[:TESTED_FOR {positive:true}]->(v:Virus)"), None, g,
                        Table.unit())
    assert out.rows() == [{"i": NodeRef(ppth.AARON), "v": NodeRef(ppth.NOROVIRUS)}]


def test_contacts_of_aaron_in_the_0936_window(ppth_graph):
    pats = patterns_of("MATCH (p:Person)-[:ADMINISTERS|IS_WITH*1..3]-(i)")
    out = match_pattern(pats, None, ppth_graph, Table(["i"], [(NodeRef(ppth.AARON),)]))
    assert {r["p"].id for r in out.rows()} == {ppth.CHASE, ppth.ALLISON, ppth.HOUSE}


def test_undirected_single_edge_matches_both_ways():
    g = PropertyGraph([node(1), node(2)], [rel(10, 1, 2, "T")])
    out = match_pattern(patterns_of("MATCH (a)-[r:T]-(b)"), None, g, Table.unit())
    assert sorted((r["a"].id, r["b"].id) for r in out.rows()) == [(1, 2), (2, 1)]


def test_undirected_self_loop_matches_once():
    g = PropertyGraph([node(1)], [rel(10, 1, 1, "T")])
    assert len(match_pattern(patterns_of("MATCH (a)-[:T]-(b)"), None, g, Table.unit())) == 1


def test_left_direction():
    g = PropertyGraph([node(1, "X"), node(2, "Y")], [rel(10, 1, 2, "T")])
    assert run("MATCH (y:Y)<-[:T]-(x) RETURN x.k AS k, y", g).rows() == [{"k": None, "y": NodeRef(2)}]
    assert len(run("MATCH (x:X)<-[:T]-(y) RETURN y", g)) == 0


def test_relationship_isomorphism_within_one_match():
    g = PropertyGraph([node(1), node(2)], [rel(10, 1, 2, "T")])
    assert len(run("MATCH (a)-[r1]-(b)-[r2]-(c) RETURN a", g)) == 0
    # separate MATCH clauses may reuse the relationship
    assert len(run("MATCH (a)-[r1]-(b) MATCH (b)-[r2]-(c) RETURN a", g)) == 2


def test_joined_patterns_share_node_variables():
    g = PropertyGraph([node(1, "P"), node(2, "P"), node(3, "R")],
                      [rel(10, 1, 3, "IN"), rel(11, 2, 3, "IN")])
    out = run("MATCH (p1:P)-[:IN]->(room:R), (p2:P)-[:IN]->(room) RETURN p1, p2", g)
    # p1 = p2 would use the same IN relationship twice
    assert sorted((r["p1"].id, r["p2"].id) for r in out.rows()) == [(1, 2), (2, 1)]


def test_path_variable():
    g = PropertyGraph([node(1), node(2), node(3)], [rel(10, 1, 2, "T"), rel(11, 2, 3, "T")])
    out = run("MATCH p = (a)-[:T*2]->(b) RETURN p", g)
    assert out.rows() == [{"p": Path.of(1, 10, 2, 11, 3)}]
    left = run("MATCH p = (b)<-[:T*2]-(a) RETURN p", g)
    assert left.rows() == [{"p": Path.of(3, 11, 2, 10, 1)}]


def test_unbounded_star_is_capped():
    chain = PropertyGraph([node(i) for i in range(20)], [rel(100 + i, i, i + 1, "T") for i in range(19)])
    q = "MATCH (a)-[:T*]->(b) WHERE a.k IS NULL RETURN COUNT(*) AS n"
    assert run(q, chain, max_varlen=3).rows() == [{"n": 19 + 18 + 17}]
    assert run(q, chain, max_varlen=30).rows() == [{"n": 19 * 20 // 2}]


def test_where_with_label_predicate_and_three_valued_logic():
    g = PropertyGraph([node(1, "A", age=5), node(2, "B", age=20), node(3, "A")])
    assert run("MATCH (p) WHERE p:A AND p.age > 1 RETURN p", g).rows() == [{"p": NodeRef(1)}]
    assert len(run("MATCH (p) WHERE NOT p.age > 10 RETURN p", g)) == 1


@pytest.mark.parametrize("text, expected", [
    ("r.positive = true", True),
    ("p.age > 10", None),
    ("NOT null", None),
    ("null = null", None),
    ("true OR null", True),
    ("false AND null", False),
    ("true XOR null", None),
    ("1 = 1.0", True),
    ("'a' < 1", None),
    ("'a' < 'b'", True),
    ("7 / 2", 3),
    ("-7 / 2", -3),
    ("7.0 / 2", 3.5),
    ("1 / 0", None),
    ("[1, 2] = [1, 2]", True),
    ("[1, null] = [1, 2]", None),
    ("{k: 1}.k", 1),
    ("'ab' + 'c'", "abc"),
    ("p.age IS NULL", True),
    ("r IS NOT NULL", True),
    ("-(3 - 5)", 2),
])
def test_expressions(text, expected):
    g = PropertyGraph([node(1), node(2)], [rel(10, 1, 2, "T", positive=True)])
    q = parse_cypher_subset(f"MATCH (p)-[r]->() RETURN {text} AS x")
    expr = q.ret.items[0].expr
    got = eval_expr(expr, {"p": NodeRef(1), "r": RelRef(10)}, g)
    assert got == expected and type(got) is type(expected)


def test_strict_mode_raises_on_incomparable_values():
    expr = parse_cypher_subset("MATCH (p) RETURN 'a' < 1 AS x").ret.items[0].expr
    with pytest.raises(EvaluationError):
        eval_expr(expr, {}, EMPTY_GRAPH, strict=True)


def test_integer_overflow():
    expr = parse_cypher_subset(f"MATCH (p) RETURN {2**62} * 4 AS x").ret.items[0].expr
    with pytest.raises(EvaluationError):
        eval_expr(expr, {}, EMPTY_GRAPH)


def test_unbound_variable():
    with pytest.raises(EvaluationError):
        eval_expr(ast.Var("nope"), {}, EMPTY_GRAPH)


def test_count_star_over_empty_input():
    ret = parse_cypher_subset("MATCH (a) RETURN COUNT(*) AS n").ret
    assert project_return(ret, Table(["a"]), EMPTY_GRAPH) == Table(["n"], [(0,)])


def test_count_skips_nulls_and_distinct():
    g = PropertyGraph([node(1, k=1), node(2, k=1), node(3)])
    out = run("MATCH (a) RETURN COUNT(a.k) AS n, COUNT(DISTINCT a.k) AS d, COUNT(*) AS s", g)
    assert out.rows() == [{"n": 2, "d": 1, "s": 3}]


def test_with_pipeline():
    g = PropertyGraph([node(i, "N", k=i % 3) for i in range(9)])
    out = run("MATCH (a:N) WITH a.k AS k, COUNT(*) AS c WHERE k > 0 RETURN k, c", g)
    assert out == Table(["k", "c"], [(1, 3), (2, 3)])


def test_return_star():
    g = PropertyGraph([node(1), node(2)], [rel(10, 1, 2, "T")])
    out = run("MATCH (a)-[r]->(b) RETURN *", g)
    assert out.rows() == [{"a": NodeRef(1), "b": NodeRef(2), "r": RelRef(10)}]


@settings(max_examples=200)
@given(st.lists(st.tuples(st.sampled_from(["x", "y", "z", None]), st.integers(0, 2)), max_size=30))
def test_grouped_count_matches_counter(rows):
    g = PropertyGraph([node(i, "N", **({} if k is None else {"k": k})) for i, (k, _) in enumerate(rows)])
    out = run("MATCH (a:N) RETURN a.k AS key, COUNT(*) AS n", g)
    expected = Counter(k for k, _ in rows)
    assert out == Table(["key", "n"], list(expected.items()))


# -- properties ----------------------------------------------------------------


def _walks(g, start, types, direction, lo, hi):
    """All relationship-distinct walks from ``start`` with length in [lo, hi]."""
    out = []

    def steps(cur):
        found = set()
        for r in g.rels.values():
            if types and r.type not in types:
                continue
            if direction in ("->", "--") and r.src == cur:
                found.add((r.id, r.trg))
            if direction in ("<-", "--") and r.trg == cur:
                found.add((r.id, r.src))
        return sorted(found)

    def dfs(cur, path, used):
        if lo <= len(used) <= hi:
            out.append(tuple(path))
        if len(used) == hi:
            return
        for rid, nxt in steps(cur):
            if rid not in used:
                dfs(nxt, path + [rid, nxt], used | {rid})

    dfs(start, [start], frozenset())
    return out


small_graphs = graphs(max_nodes=8, max_rels=9, node_ids=range(0, 8), rel_ids=range(100, 109))


@settings(max_examples=300)
@given(small_graphs, st.sets(st.sampled_from(TYPES), max_size=2), st.sampled_from(["->", "<-", "--"]),
       st.integers(1, 3), st.integers(0, 2))
def test_variable_length_matches_dfs_oracle(g, types, direction, lo, extra):
    hi = lo + extra
    left, right = {"->": ("-", "->"), "<-": ("<-", "-"), "--": ("-", "-")}[direction]
    typ = ":" + "|".join(sorted(types)) if types else ""
    out = run(f"MATCH p = (a){left}[{typ}*{lo}..{hi}]{right}(b) RETURN p", g)
    expected = Counter(w for n in g.nodes for w in _walks(g, n, types, direction, lo, hi))
    assert Counter({row["p"].ids: n for row, n in out.items()}) == expected


@settings(max_examples=300)
@given(small_graphs, st.sampled_from([
    "MATCH (a)-[r1]->(b)-[r2]-(c) RETURN r1, r2",
    "MATCH (a)-[r1]-(b), (b)-[r2]-(c), (c)-[r3]-(a) RETURN r1, r2, r3",
    "MATCH p = (a)-[*1..4]-(b) RETURN p",
    "MATCH p = (a)-[r1]->(b), q = (b)-[*1..3]-(c) RETURN p, q",
]))
def test_no_relationship_bound_twice(g, text):
    for row in run(text, g).rows():
        rels = []
        for v in row.values():
            rels += [v.id] if isinstance(v, RelRef) else list(v.relationships)
        assert len(rels) == len(set(rels))


@st.composite
def graph_pairs(draw):
    """g and a supergraph g2 of g."""
    sh = draw(shapes())
    g = draw(graphs(node_ids=range(0, 8), rel_ids=range(100, 116), shapes=sh, values=st.integers(0, 2)))
    extra = draw(graphs(node_ids=range(0, 8), rel_ids=range(100, 116), shapes=sh, values=st.integers(0, 2)))
    bigger = graph_union(extra, g)  # g's properties win, so g stays a subgraph
    return g, bigger


MATCHES = [
    "MATCH (a)-[r]->(b) RETURN a, r, b",
    "MATCH (a:A)-[:T|U*1..2]-(b) RETURN a, b",
    "MATCH (a)-[r]-(b), (b)-[s:T]->(c:B) RETURN a, c",
    "MATCH (a {k: 1})<-[r]-(b) RETURN b",
]


@settings(max_examples=300)
@given(graph_pairs(), st.sampled_from(MATCHES))
def test_match_is_monotone(pair, text):
    g, bigger = pair
    small, large = run(text, g), run(text, bigger)
    assert small.difference(large) == Table(small.fields)


@settings(max_examples=200)
@given(graph_pairs(), st.sampled_from(MATCHES + ["MATCH (a) RETURN a.k AS k, COUNT(*) AS n"]))
def test_evaluation_depends_only_on_the_graph(pair, text):
    g1, g2 = pair
    merged = graph_union(g1, g2)
    one_shot = PropertyGraph(merged.nodes.values(), merged.rels.values())
    assert run(text, merged) == run(text, one_shot)


@settings(max_examples=200)
@given(small_graphs, st.sampled_from(MATCHES))
def test_distinct_has_unit_multiplicities(g, text):
    out = run(text.replace("RETURN", "RETURN DISTINCT"), g)
    assert all(n == 1 for _, n in out.counts())
    assert set(r for r, _ in out.counts()) == set(r for r, _ in run(text, g).counts())
