"""Clique vs stable set protocol: transcripts, tree recovery, leaf EFs."""

import random
from fractions import Fraction

import pytest

from polylift import (
    ALICE,
    BOB,
    Graph,
    LeafValueError,
    ProtocolError,
    YRectangle,
    build_stab_qstab_ef,
    build_tree,
    check_sandwich,
    enumerate_rectangles,
    enumeration_bound,
    fourier_motzkin,
    is_satisfied,
    leaf_ef,
    protocol_to_json,
    qstab_formulation,
    rectangle_contains_clique,
    rectangle_contains_stable,
    run_protocol,
    systems_equal_lp,
    vertex_var,
    vertex_vars,
)
from polylift.lp import LpProgram

from conftest import random_connected_graph
from oracles import max_weight_stable_set


def k2() -> Graph:
    return Graph.of(2, [(0, 1)], names=("a", "b"))


def single() -> Graph:
    return Graph.of(1, names=("u",))


def replay_all(g: Graph, order=None):
    """Transcript for every (clique, stable set) pair of g."""
    out = {}
    for c in g.enumerate_cliques(include_empty=True):
        for s in g.enumerate_stable_sets(include_empty=True):
            out[(c, s)] = run_protocol(g, c, s, order)
    return out


# ---------------------------------------------------------------- transcripts


def test_run_p3_clique_ab_vs_c(p3):
    t = run_protocol(p3, [0, 1], [2])
    assert t.outcome == "disjoint" and t.value == 1
    # a goes out first (low degree, smallest index), then b on the shrunken
    # graph, then the empty exchange
    assert t.path == ("v0", "miss", "v1", "miss", "none", "empty")
    assert t.senders[0] == ALICE
    assert [st.sent for st in t.stages] == [0, 1, None]
    assert t.stages[0].low == (0, 2) and t.stages[0].high == (1,)
    assert t.stages[1].live == (1,)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_shared_singleton_intersects(seed):
    g = random_connected_graph(6, seed=40 + seed)
    v = random.Random(seed).randrange(g.n)
    t = run_protocol(g, [v], [v])
    assert t.outcome == "intersect" and t.value == 0
    assert t.path[-1] == "hit"


def test_empty_pair_disjoint(p3):
    for g, first in [(p3, ALICE), (k2(), ALICE), (Graph.of(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]), BOB)]:
        t = run_protocol(g, [], [])
        assert t.outcome == "disjoint" and t.value == 1
        assert t.path == ("none", "empty")
        # K4 has no low-degree vertex, so the stable-set side opens
        assert t.senders[0] == first


def test_invalid_inputs(p3):
    with pytest.raises(ProtocolError):
        run_protocol(p3, [0, 2], [])  # not a clique
    with pytest.raises(ProtocolError):
        run_protocol(p3, [], [0, 1])  # not stable
    with pytest.raises(ProtocolError):
        run_protocol(p3, [0], [2], order=[0, 0, 1])


@pytest.mark.parametrize("n,seed", [(5, 10), (6, 11), (7, 12)])
def test_every_step_halves(n, seed):
    g = random_connected_graph(n, seed)
    for t in replay_all(g).values():
        for before, after in zip(t.stages, t.stages[1:]):
            assert len(after.live) <= len(before.live) // 2


# ------------------------------------------------------------- tree recovery


def test_single_vertex_tree():
    g = single()
    tree = build_tree(g)
    leaf_paths = {path for path, _ in tree.iter_leaves()}
    runs = replay_all(g)
    assert leaf_paths == {t.path for t in runs.values()}
    assert len(leaf_paths) == 3
    assert runs[((), ())].value == 1
    assert runs[((0,), (0,))].value == 0


@pytest.mark.parametrize(
    "g",
    [
        single(),
        k2(),
        Graph.of(3, [(0, 1), (1, 2)], names=("a", "b", "c")),
        Graph.of(4, [(0, 1), (0, 2), (0, 3)]),
        Graph.of(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], names=tuple("abcde")),
        random_connected_graph(6, 21),
        random_connected_graph(7, 22),
        random_connected_graph(8, 23),
    ],
    ids=lambda g: "n%d-%s" % (g.n, g.edge_key()[:12] or "empty"),
)
def test_tree_matches_exhaustive_replay(g):
    tree = build_tree(g)
    leaf_paths = {path for path, _ in tree.iter_leaves()}
    by_path = {}
    for (c, s), t in replay_all(g).items():
        # determinism gives the partition: each pair lands on exactly one
        # leaf, and that leaf must exist in the reconstructed tree
        assert t.path in leaf_paths
        by_path.setdefault(t.path, []).append((c, s, t.value))
    assert set(by_path) == leaf_paths
    for entries in by_path.values():
        values = {val for _, _, val in entries}
        assert len(values) == 1  # monochromatic
        for c, s, val in entries:
            assert len(set(c) & set(s)) == 1 - val


@pytest.mark.parametrize("n,seed", [(2, 0), (4, 31), (6, 32), (8, 33)])
def test_rectangle_size_bound(n, seed):
    g = k2() if n == 2 else random_connected_graph(n, seed)
    rects = enumerate_rectangles(g)
    assert max(r.combined_size for r in rects) <= enumeration_bound(g.n)


# ------------------------------------------------------- rectangle membership


def test_rectangle_contains_itself(p3):
    for rect in enumerate_rectangles(p3):
        if "go" in rect.path:
            continue  # named sets alone cannot replay across a go reply
        assert rectangle_contains_clique(p3, rect, rect.clique)
        assert rectangle_contains_stable(p3, rect, rect.stable)


def test_clique_avoiding_first_vertex_leaves(p3):
    t = run_protocol(p3, [0, 1], [2])
    rect = next(r for r in enumerate_rectangles(p3) if r.path == t.path)
    assert rect.clique == (0, 1)
    # {b} is a clique missing the first vertex a sent on this path
    assert not rectangle_contains_clique(p3, rect, [1])


@pytest.mark.parametrize("g", [Graph.of(3, [(0, 1), (1, 2)], names=("a", "b", "c")), random_connected_graph(5, 44)], ids=["p3", "rand5"])
def test_sandwiched_cliques_stay_inside(g):
    rects = {r.path: r for r in enumerate_rectangles(g)}
    for (c, s), t in replay_all(g).items():
        rect = rects[t.path]
        lo, hi = set(rect.clique), set(c)
        if not lo <= hi:
            continue  # go replies certify pool vertices the named set lacks
        extra = sorted(hi - lo)
        for mask in range(1 << len(extra)):
            mid = sorted(lo | {extra[i] for i in range(len(extra)) if mask >> i & 1})
            # shrinking the clique toward the named one never leaves the leaf
            assert run_protocol(g, mid, s).path == t.path
            if "go" not in t.path:
                assert rectangle_contains_clique(g, rect, mid)


# ------------------------------------------------------------------- leaf EFs


def test_leaf_ef_p3_frozen(p3):
    t = run_protocol(p3, [0, 1], [2])
    rect = next(r for r in enumerate_rectangles(p3) if r.path == t.path)
    ef = leaf_ef(p3, rect)
    assert [str(e) for e in ef.system.equations] == ["x.a = 0", "x.b = 0"]
    assert len(ef.system.inequalities) == 6  # the 0/1 box on three vertices


def test_leaf_ef_single_vertex_value0():
    g = single()
    rect = next(r for r in enumerate_rectangles(g) if r.value == 0)
    ef = leaf_ef(g, rect)
    assert [str(e) for e in ef.system.equations] == ["x.u = 1"]


@pytest.mark.parametrize("g", [k2(), Graph.of(3, [(0, 1), (1, 2)], names=("a", "b", "c")), random_connected_graph(5, 51)], ids=["k2", "p3", "rand5"])
def test_leaf_ef_holds_on_own_columns(g):
    for rect in enumerate_rectangles(g):
        ef = leaf_ef(g, rect)
        for s in g.enumerate_stable_sets(include_empty=True):
            if not rectangle_contains_stable(g, rect, s):
                continue
            point = {vertex_var(name): Fraction(i in s) for i, name in enumerate(g.names)}
            assert is_satisfied(ef.system, point)


def test_leaf_ef_rejects_bad_meet():
    g = k2()
    with pytest.raises(LeafValueError):
        leaf_ef(g, YRectangle((0, 1), (0, 1), 0, ()))
    with pytest.raises(LeafValueError):
        leaf_ef(g, YRectangle((0,), (1,), 0, ()))


# ------------------------------------------------------------- compiled EFs


def test_k2_compiles_to_exact_stable_set_polytope():
    g = k2()
    _, form, _ = build_stab_qstab_ef(g)
    shadow = fourier_motzkin(form.system, vertex_vars(g), cap=len(form.system.variables))
    equal, witness = systems_equal_lp(shadow, qstab_formulation(g).system)
    assert equal, witness


def test_p3_lp_matches_brute_force(p3):
    _, form, _ = build_stab_qstab_ef(p3)
    prog = LpProgram(form.system)
    rng = random.Random(777)
    names = list(p3.names)
    for _ in range(50):
        w = {v: rng.randint(-9, 9) for v in names}
        res = prog.solve({vertex_var(v): Fraction(c) for v, c in w.items()}, "max")
        best, _ = max_weight_stable_set(p3.n, p3.edges(), [w[v] for v in names])
        assert res.status == "optimal" and res.value == best


def test_c5_sandwich_and_census():
    g = Graph.of(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], names=tuple("abcde"))
    tree, form, census = build_stab_qstab_ef(g)
    report = check_sandwich(g, form, seed=5)
    assert report.passed, report.failures[:3]
    leaves = list(tree.iter_leaves())
    assert census["leaves"] == len(leaves) == census["value0_leaves"] + census["value1_leaves"]
    assert census["max_combined_size"] <= census["bound"] == enumeration_bound(5)
    assert census["leaf_cap"] == 5 ** 5
    assert census["within_leaf_cap"] == (census["leaves"] <= census["leaf_cap"])
    # compile overhead stays within 4x of the leaf encodings plus dimension
    budget = 4 * sum(m["total_encoding"] + g.n for m in census["leaf_metrics"])
    assert census["compiled"]["total_encoding"] <= budget


def test_p3_census_frozen(p3):
    _, _, census = build_stab_qstab_ef(p3)
    assert census["n"] == 3 and census["bound"] == 3
    assert census["pairs_enumerated"] == 28
    assert census["leaves"] == 11


def test_balanced_compile_same_polytope(p3):
    _, plain, _ = build_stab_qstab_ef(p3)
    _, folded, _ = build_stab_qstab_ef(p3, balanced=True)
    a, b = LpProgram(plain.system), LpProgram(folded.system)
    rng = random.Random(9)
    for _ in range(10):
        obj = {vertex_var(v): Fraction(rng.randint(-5, 5)) for v in p3.names}
        assert a.solve(obj, "max").value == b.solve(obj, "max").value


# ------------------------------------------------------------------ the knobs


def test_order_flag_changes_first_sender():
    g = k2()
    assert run_protocol(g, [0, 1], [], order=[1, 0]).path[0] == "v1"
    assert protocol_to_json(build_tree(g)) != protocol_to_json(build_tree(g, order=[1, 0]))
    assert protocol_to_json(build_tree(g, order=[1, 0])) == protocol_to_json(build_tree(g, order=[1, 0]))


def test_inclusive_neighborhood_keeps_sender(p3):
    plain = run_protocol(p3, [0], [2])
    kept = run_protocol(p3, [0], [2], inclusive_neighborhood=True)
    assert plain.outcome == kept.outcome == "disjoint"
    assert plain.stages[1].live == (1,)
    assert kept.stages[1].live == (0, 1)


def test_ordered_build_still_sandwiches(p3):
    _, form, _ = build_stab_qstab_ef(p3, order=[2, 1, 0])
    assert check_sandwich(p3, form, seed=3).passed
