"""Decomposition trees: splits, the general builder, pattern-free builder."""

import random
from fractions import Fraction
from itertools import combinations

import pytest

from polylift import (
    CompileError,
    DecompositionError,
    DegeneratePatternError,
    Formulation,
    Graph,
    HFreenessError,
    NotThresholdError,
    build_general_tree,
    build_threshold_tree,
    check_sandwich,
    compile_decomposition,
    decomposition_census,
    fourier_motzkin,
    qstab_formulation,
    split,
    systems_equal_lp,
    vertex_var,
    vertex_vars,
)
from polylift.decomposition import COMPLEMENT_NODE, LEAF_NODE, SPLIT_NODE, node_graph
from polylift.lp import LpProgram

from conftest import random_connected_graph
from oracles import max_weight_stable_set


def claw() -> Graph:
    return Graph.of(4, [(0, 1), (0, 2), (0, 3)])


def complete(n: int) -> Graph:
    return Graph.of(n, list(combinations(range(n), 2)))


# --------------------------------------------------------------------- split


def test_split_p3_on_middle(p3):
    rest, piece = split(p3, [1])
    assert rest.names == ("a", "c") and not rest.edges()
    # b's closed neighborhood is the whole path
    assert piece.names == ("a", "b", "c") and piece.edges() == p3.edges()


def test_split_k2():
    g = Graph.of(2, [(0, 1)], names=("a", "b"))
    rest, piece = split(g, [0])
    assert rest.names == ("b",)
    assert piece.names == ("a", "b") and piece.edges() == [(0, 1)]
    # branching on every vertex leaves an empty remainder
    assert split(g, [0, 1])[0].n == 0


def test_split_rejects_bad_vertices(p3):
    with pytest.raises(DecompositionError):
        split(p3, [1, 1])
    with pytest.raises(DecompositionError):
        split(p3, [5])


@pytest.mark.parametrize("n,seed", [(5, 60), (6, 61), (7, 62), (8, 63)])
def test_split_preserves_cliques(n, seed):
    g = random_connected_graph(n, seed)
    rng = random.Random(seed)
    chosen = rng.sample(range(n), rng.randint(1, n))
    pieces = split(g, chosen)
    names = [set(p.names) for p in pieces]
    for clique in g.enumerate_cliques():
        members = {g.names[v] for v in clique}
        assert any(members <= piece for piece in names)


# -------------------------------------------------------------- general tree


def test_small_graph_is_single_leaf(p3):
    tree = build_general_tree(p3, c=3)
    assert tree.kind == LEAF_NODE and tree.subset == (0, 1, 2)


def test_p4_root_splits_on_all_low_vertices():
    p4 = Graph.of(4, [(0, 1), (1, 2), (2, 3)])
    tree = build_general_tree(p4, c=2)
    assert tree.kind == SPLIT_NODE and tree.split_vertices == (0, 1, 2, 3)
    assert [child.subset for child in tree.children] == [
        (0, 1),
        (1, 2),
        (2, 3),
        (3,),
    ]


def test_k5_roots_at_complement():
    tree = build_general_tree(complete(5), c=2)
    assert tree.kind == COMPLEMENT_NODE
    inner = tree.children[0]
    assert inner.kind == SPLIT_NODE and inner.parity == 1
    assert all(c.kind == LEAF_NODE and len(c.subset) == 1 for c in inner.children)
    assert decomposition_census(tree) == {
        "nodes": 7,
        "leaves": 5,
        "splits": 1,
        "complements": 1,
        "max_leaf_size": 1,
        "depth": 3,
    }


def test_leaf_size_guard(p3):
    with pytest.raises(DecompositionError):
        build_general_tree(p3, c=0)


@pytest.mark.parametrize("n,seed", [(6, 70), (7, 71), (8, 72), (8, 73)])
def test_general_tree_shape(n, seed):
    g = random_connected_graph(n, seed)
    tree = build_general_tree(g, c=2)
    for node in tree.iter_nodes():
        if node.kind == LEAF_NODE:
            assert len(node.subset) <= 2
        elif node.kind == SPLIT_NODE:
            cap = len(node.subset) // 2 + 1
            assert all(len(c.subset) <= cap for c in node.children)
    census = decomposition_census(tree)
    height = (n - 1).bit_length()
    assert census["depth"] <= 2 * height + 3
    assert census["nodes"] <= n ** (height + 2)


# ----------------------------------------------------------------- compiling


def test_single_leaf_passthrough(p3):
    tree = build_general_tree(p3, c=3)
    form = qstab_formulation(p3)
    assert compile_decomposition(p3, tree, {tree: form}) is form


def test_missing_leaf_formulation():
    p4 = Graph.of(4, [(0, 1), (1, 2), (2, 3)])
    tree = build_general_tree(p4, c=2)
    with pytest.raises(CompileError):
        compile_decomposition(p4, tree, {})


def test_leaf_formulation_wrong_space(p3):
    tree = build_general_tree(p3, c=3)
    alien = qstab_formulation(Graph.of(3, [(0, 1)], names=("x", "y", "z")))
    with pytest.raises(CompileError):
        compile_decomposition(p3, tree, {tree: alien})


def test_p3_singleton_leaves_exact(p3):
    form = compile_decomposition(p3, build_general_tree(p3, c=1))
    assert check_sandwich(p3, form, seed=1).passed
    prog = LpProgram(form.system)
    rng = random.Random(404)
    for _ in range(20):
        w = [rng.randint(-6, 9) for _ in range(3)]
        obj = {vertex_var(nm): Fraction(c) for nm, c in zip(p3.names, w)}
        best, _ = max_weight_stable_set(3, p3.edges(), w)
        assert prog.solve(obj, "max").value == best


def test_k3_compiles_to_simplex():
    g = complete(3)
    tree = build_general_tree(g, c=2)
    assert tree.kind == COMPLEMENT_NODE
    form = compile_decomposition(g, tree)
    shadow = fourier_motzkin(form.system, vertex_vars(g), cap=len(form.system.variables))
    equal, witness = systems_equal_lp(shadow, qstab_formulation(g).system)
    assert equal, witness


def test_k5_polar_step_exact():
    g = complete(5)
    form = compile_decomposition(g, build_general_tree(g, c=2))
    prog = LpProgram(form.system)
    rng = random.Random(55)
    for _ in range(30):
        w = [rng.randint(-4, 9) for _ in range(5)]
        obj = {vertex_var(nm): Fraction(c) for nm, c in zip(g.names, w)}
        best, _ = max_weight_stable_set(5, g.edges(), w)
        assert prog.solve(obj, "max").value == best


@pytest.mark.parametrize("n,seed", [(5, 80), (6, 81)])
def test_compile_sandwich_random(n, seed):
    g = random_connected_graph(n, seed)
    form = compile_decomposition(g, build_general_tree(g, c=2))
    assert check_sandwich(g, form, seed=seed).passed


# ------------------------------------------------------------ threshold trees


def test_threshold_tree_on_p4():
    p4 = Graph.of(4, [(0, 1), (1, 2), (2, 3)])
    tree = build_threshold_tree(p4, claw())
    assert tree.kind == SPLIT_NODE and tree.split_vertices == (0, 1, 2, 3)
    census = decomposition_census(tree)
    assert census["max_leaf_size"] == 1
    assert census["nodes"] <= 4**4
    form = compile_decomposition(p4, tree)
    assert check_sandwich(p4, form, seed=7).passed


def test_threshold_tree_reports_pattern_copy():
    g = Graph.of(5, [(0, 1), (0, 2), (0, 3), (3, 4)])  # claw at vertex 0
    with pytest.raises(HFreenessError) as err:
        build_threshold_tree(g, claw())
    idx = [g.names.index(nm) for nm in err.value.witness]
    assert len(idx) == 4
    center, leaves = idx[0], idx[1:]
    assert all(g.adjacent(center, v) for v in leaves)
    assert all(not g.adjacent(u, v) for u, v in combinations(leaves, 2))


def test_anticomplete_pattern_inserts_complement():
    g = complete(3)
    two_apart = Graph.of(2)  # forbids any nonadjacent pair
    tree = build_threshold_tree(g, two_apart)
    assert tree.kind == COMPLEMENT_NODE
    assert decomposition_census(tree)["max_leaf_size"] == 1
    form = compile_decomposition(g, tree)
    assert check_sandwich(g, form, seed=2).passed


def test_anticomplete_pattern_witness(p3):
    with pytest.raises(HFreenessError) as err:
        build_threshold_tree(p3, Graph.of(2))
    u, v = (p3.names.index(nm) for nm in err.value.witness)
    assert not p3.adjacent(u, v)


def test_degenerate_and_non_threshold_patterns(p3):
    with pytest.raises(DegeneratePatternError):
        build_threshold_tree(p3, Graph.of(1))
    with pytest.raises(NotThresholdError):
        build_threshold_tree(p3, Graph.of(4, [(0, 1), (1, 2), (2, 3)]))
    with pytest.raises(NotThresholdError):
        build_threshold_tree(p3, Graph.of(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))


def test_node_graph_tracks_parity(p3):
    tree = build_general_tree(complete(3), c=2)
    inner = tree.children[0]
    assert node_graph(complete(3), inner).edges() == []
