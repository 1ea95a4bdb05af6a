import json
import random

import pytest

from polylift import Graph, Poset, PosetError, graph_from_text, vertex_var, vertex_vars

import oracles
from conftest import random_connected_graph, random_poset


def test_graph_of_builds_symmetric_adjacency():
    g = Graph.of(3, [(0, 1), (1, 2)])
    assert g.adjacent(0, 1) and g.adjacent(1, 0)
    assert not g.adjacent(0, 2)
    assert g.degree(1) == 2
    assert g.edges() == [(0, 1), (1, 2)]


def test_graph_rejects_loops_and_bad_edges():
    with pytest.raises(ValueError):
        Graph.of(2, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.of(2, [(0, 5)])
    with pytest.raises(ValueError):
        Graph.of(2, [], names=("a", "a"))


def test_complement_and_induced():
    g = Graph.of(4, [(0, 1), (1, 2), (2, 3)])
    gc = g.complement()
    assert sorted(gc.edges()) == [(0, 2), (0, 3), (1, 3)]
    sub = g.induced([1, 2, 3])
    assert sub.n == 3 and sub.edges() == [(0, 1), (1, 2)]
    assert sub.names == ("v1", "v2", "v3")


def test_enumerations_match_oracle():
    for seed in range(8):
        g = random_connected_graph(5, 600 + seed)
        edges = g.edges()
        got_stable = {frozenset(s) for s in g.enumerate_stable_sets(include_empty=True)}
        got_clique = {frozenset(c) for c in g.enumerate_cliques(include_empty=True)}
        assert got_stable == set(oracles.enumerate_stable_sets(5, edges))
        assert got_clique == set(oracles.enumerate_cliques(5, edges, include_empty=True))


def test_enumeration_order_is_by_size_then_index():
    g = Graph.of(3, [(0, 1)])
    assert g.enumerate_stable_sets() == [(0,), (1,), (2,), (0, 2), (1, 2)]


def test_find_induced_copy_claw():
    claw = Graph.of(4, [(0, 1), (0, 2), (0, 3)])
    star = Graph.of(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    hit = star.find_induced_copy(claw)
    assert hit is not None and hit[0] == 0
    assert not Graph.of(4, [(0, 1), (1, 2), (2, 3)]).contains_induced(claw)


def test_low_high_split_threshold():
    g = Graph.of(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
    low, high = g.low_high_split()
    # degree 1 and 2 vertices sit in the low half at n = 4
    assert low == frozenset({1, 2, 3})
    assert high == frozenset({0})


def test_graph_json_round_trip():
    g = random_connected_graph(6, 42)
    assert Graph.from_json(json.loads(json.dumps(g.to_json()))).edge_key() == g.edge_key()


def test_graph_from_text_both_formats():
    g = graph_from_text('{"n": 3, "edges": [[0, 1]], "names": ["a", "b", "c"]}')
    assert g.names == ("a", "b", "c")
    d = graph_from_text("c comment\np edge 3 2\ne 1 2\ne 2 3\n")
    assert d.edges() == [(0, 1), (1, 2)]
    with pytest.raises(ValueError):
        graph_from_text("q nonsense")


def test_vertex_vars_naming():
    g = Graph.of(2, [], names=("a", "b"))
    assert [x.text for x in vertex_vars(g)] == ["x.a", "x.b"]
    assert vertex_var("a") == vertex_vars(g)[0]


# ----------------------------------------------------------------------
# posets


def test_poset_closes_transitively():
    p = Poset.of(3, [(0, 1), (1, 2)])
    assert p.less(0, 2)
    assert p.comparable(2, 0)
    assert not p.comparable(0, 0)


def test_poset_rejects_cycles():
    with pytest.raises(PosetError):
        Poset.of(2, [(0, 1), (1, 0)])
    with pytest.raises(PosetError):
        Poset.of(3, [(0, 1), (1, 2), (2, 0)])


def test_poset_chains_and_antichains():
    p = Poset.of(3, [(0, 1)])
    assert p.chains() == [(0,), (1,), (2,), (0, 1)]
    assert p.antichains() == [(0,), (1,), (2,), (0, 2), (1, 2)]
    assert p.sort_chain([1, 0]) == (0, 1)
    with pytest.raises(PosetError):
        p.sort_chain([0, 2])


def test_poset_antichains_match_oracle():
    for seed in range(6):
        p = random_poset(6, 900 + seed)
        weights = [1] * 6
        best = max(len(a) for a in p.antichains(include_empty=True))
        assert best == oracles.max_weight_antichain(6, p.strict, weights)


def test_comparability_graph_edges_are_comparable_pairs():
    p = Poset.of(4, [(0, 1), (1, 2)])
    g = p.comparability_graph()
    assert sorted(g.edges()) == [(0, 1), (0, 2), (1, 2)]


def test_poset_json_round_trip():
    p = random_poset(5, 77)
    q = Poset.from_json(json.loads(json.dumps(p.to_json())))
    assert q.strict == p.strict and q.names == p.names
