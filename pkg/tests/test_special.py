"""Closed-form constructions: min-up/min-down, star-free graphs, posets."""

import random
from fractions import Fraction
from itertools import combinations

import pytest

from polylift import (
    Formulation,
    Graph,
    LinearConstraint,
    LinearSystem,
    MinUpDownInstance,
    NotStarFreeError,
    Poset,
    check_sandwich,
    clawfree_full_ef,
    clawfree_rectangles,
    clawfree_reduced_ef,
    comparability_full_ef,
    comparability_reduced_ef,
    fourier_motzkin,
    mud_ef,
    mud_facets,
    mud_var,
    mud_vertices,
    projections_agree,
    size_metrics,
    systems_equal_lp,
    vertex_var,
    vertex_vars,
)
from polylift.formulation import box_rows
from polylift.lp import OPTIMAL, LpProgram
from polylift.special import clique_anchor_rectangles, rectangle_var, star_graph

from oracles import max_weight_stable_set, updown_schedules


def mud(T: int, up: int, down: int) -> MinUpDownInstance:
    return MinUpDownInstance(T, min_down=down, min_up=up)


def bits(s: str) -> tuple[int, ...]:
    return tuple(int(c) for c in s)


# ------------------------------------------------------------ mud vertices


def test_mud_vertices_frozen_smalls():
    assert len(mud_vertices(mud(2, 2, 2))) == 4  # one switch is never a pair
    v322 = mud_vertices(mud(3, 2, 2))
    assert len(v322) == 6
    assert bits("010") not in v322 and bits("101") not in v322
    assert len(mud_vertices(mud(3, 1, 1))) == 8


def test_mud_vertices_asymmetric():
    vs = mud_vertices(mud(3, 2, 1))  # short on-blocks banned, off-blocks free
    assert bits("010") not in vs and bits("101") in vs
    vs = mud_vertices(mud(4, 3, 1))
    assert bits("0110") not in vs and bits("1100") in vs  # boundary run exempt


@pytest.mark.parametrize("T", [3, 4, 5, 6])
def test_mud_vertices_match_oracle(T):
    for up in range(1, T + 1):
        for down in range(1, T + 1):
            mine = set(mud_vertices(mud(T, up, down)))
            assert mine == set(updown_schedules(T, up, down))


def test_mud_instance_guards():
    with pytest.raises(ValueError):
        MinUpDownInstance(0, min_down=1, min_up=1)
    with pytest.raises(ValueError):
        MinUpDownInstance(3, min_down=4, min_up=1)


# -------------------------------------------------------------- mud facets


def test_mud_facets_unit_rows_present():
    sys_ = mud_facets(mud(4, 2, 3))
    rows = set(map(str, sys_.inequalities))
    for i in range(1, 5):
        assert "-x.t%d <= 0" % i in rows
        assert "x.t%d <= 1" % i in rows


def test_mud_facets_alternating_row():
    rows = set(map(str, mud_facets(mud(3, 2, 2)).inequalities))
    assert "-x.t1 + x.t2 - x.t3 <= 0" in rows
    assert "x.t1 - x.t2 + x.t3 <= 1" in rows
    # spans longer than the block length stay out
    assert "-x.t1 + x.t2 - x.t3 <= 0" not in set(
        map(str, mud_facets(mud(3, 1, 2)).inequalities)
    )


@pytest.mark.parametrize("T,up,down", [(3, 2, 2), (4, 3, 2), (5, 2, 4), (6, 4, 3)])
def test_mud_vertices_satisfy_facets(T, up, down):
    inst = mud(T, up, down)
    sys_ = mud_facets(inst)
    for vtx in mud_vertices(inst):
        point = {mud_var(i + 1): Fraction(b) for i, b in enumerate(vtx)}
        for row in sys_.inequalities:
            assert row.evaluate(point) <= row.rhs


# ------------------------------------------------------------------ mud EF


def test_mud_ef_t3_matches_vertex_oracle():
    inst = mud(3, 2, 2)
    verts = mud_vertices(inst)
    prog = LpProgram(mud_ef(inst).system)
    xs = [mud_var(i) for i in range(1, 4)]
    rng = random.Random(31)
    for _ in range(100):
        c = [Fraction(rng.randint(-10, 10)) for _ in range(3)]
        best = max(sum(ci * vi for ci, vi in zip(c, v)) for v in verts)
        res = prog.solve(dict(zip(xs, c)), "max")
        assert res.status == OPTIMAL and res.value == best


def test_mud_ef_t2_is_unit_square():
    form = mud_ef(mud(2, 2, 2))
    xs = [mud_var(1), mud_var(2)]
    square = Formulation.of(xs, (), box_rows(xs, 0, 1), ())
    report = projections_agree(form, square, directions=40, seed=11)
    assert report.passed, report.failures[:3]


@pytest.mark.parametrize("T", [2, 3, 4])
def test_mud_three_way_equality(T):
    xs = [mud_var(i) for i in range(1, T + 1)]
    for up in range(1, T + 1):
        for down in range(1, T + 1):
            inst = mud(T, up, down)
            verts = mud_vertices(inst)
            facet_prog = LpProgram(mud_facets(inst))
            ef_prog = LpProgram(mud_ef(inst).system)
            rng = random.Random(900 + 10 * up + down)
            for _ in range(20):
                c = [Fraction(rng.randint(-10, 10)) for _ in range(T)]
                obj = dict(zip(xs, c))
                best = max(sum(ci * vi for ci, vi in zip(c, v)) for v in verts)
                assert facet_prog.solve(obj, "max").value == best
                assert ef_prog.solve(obj, "max").value == best


@pytest.mark.parametrize("T,up,down", [(4, 2, 3), (6, 3, 2), (8, 4, 4)])
def test_mud_ef_size_budget(T, up, down):
    form = mud_ef(mud(T, up, down))
    assert len(form.system.inequalities) <= 3 * T * (up + down) ** 2


# ------------------------------------------------------------- star-free y


def test_clawfree_rectangles_p3(p3):
    rects = clawfree_rectangles(p3, 3)
    assert len(rects) == 8
    per_vertex = {v: sum(1 for u, _ in rects if u == v) for v in range(3)}
    assert per_vertex == {0: 2, 1: 4, 2: 2}


def test_clawfree_rectangles_k2_and_isolated():
    k2 = Graph.of(2, [(0, 1)], names=("a", "b"))
    assert [(v, tuple(sorted(s))) for v, s in clawfree_rectangles(k2, 3)] == [
        (0, ()),
        (0, (1,)),
        (1, ()),
        (1, (0,)),
    ]
    g = Graph.of(3, [(0, 1)])
    assert [s for v, s in clawfree_rectangles(g, 3) if v == 2] == [frozenset()]


def test_clawfree_rejects_star():
    with pytest.raises(NotStarFreeError):
        clawfree_rectangles(star_graph(3), 3)
    with pytest.raises(ValueError):
        clawfree_rectangles(Graph.of(2, [(0, 1)]), 1)
    # K_{1,3} is K_{1,4}-free, so widening the bound admits it
    assert clawfree_rectangles(star_graph(3), 4)


def test_clawfree_full_p3(p3):
    form = clawfree_full_ef(p3, 3)
    assert len(form.system.equations) == 5  # one per nonempty clique
    assert check_sandwich(p3, form, seed=4).passed


@pytest.mark.parametrize(
    "g",
    [
        Graph.of(4, [(0, 1), (1, 2), (2, 3)]),
        Graph.of(5, [(0, 1), (1, 2), (2, 3), (3, 4)]),
    ],
    ids=["p4", "p5"],
)
def test_clawfree_full_exact_on_paths(g):
    prog = LpProgram(clawfree_full_ef(g, 3).system)
    rng = random.Random(21)
    for _ in range(30):
        w = [rng.randint(-6, 9) for _ in range(g.n)]
        obj = {vertex_var(nm): Fraction(c) for nm, c in zip(g.names, w)}
        best, _ = max_weight_stable_set(g.n, g.edges(), w)
        assert prog.solve(obj, "max").value == best


def test_clawfree_reduced_equation_count():
    for g in [
        Graph.of(4, [(0, 1), (1, 2), (2, 3)]),
        Graph.of(3, [(0, 1), (1, 2), (2, 0)]),
        Graph.of(4, [(0, 1), (1, 2), (2, 0), (2, 3)]),  # triangle with a tail
    ]:
        form = clawfree_reduced_ef(g, 3)
        assert len(form.system.equations) == g.n + len(g.edges())


def test_clawfree_reduced_k3_vs_full():
    k3 = Graph.of(3, [(0, 1), (1, 2), (2, 0)])
    reduced = clawfree_reduced_ef(k3, 3)
    full = clawfree_full_ef(k3, 3)
    assert len(reduced.system.equations) == 6
    assert len(full.system.equations) == 7  # the triangle row on top
    a, b = LpProgram(full.system), LpProgram(reduced.system)
    rng = random.Random(77)
    for _ in range(100):
        obj = {vertex_var(nm): Fraction(rng.randint(-9, 9)) for nm in k3.names}
        ra, rb = a.solve(obj, "max"), b.solve(obj, "max")
        assert ra.status == rb.status == OPTIMAL and ra.value == rb.value


def test_clawfree_reduced_k2_identical():
    k2 = Graph.of(2, [(0, 1)], names=("a", "b"))
    full = clawfree_full_ef(k2, 3)
    reduced = clawfree_reduced_ef(k2, 3)
    assert set(map(str, full.system.constraints())) == set(
        map(str, reduced.system.constraints())
    )


@pytest.mark.parametrize(
    "g",
    [
        Graph.of(4, list(combinations(range(4), 2))),
        Graph.of(4, [(0, 1), (1, 2), (2, 0), (2, 3)]),
    ],
    ids=["k4", "paw"],
)
def test_clawfree_big_clique_rows_are_combinations(g):
    """Each clique row of the full system is a signed sum of reduced rows:
    the anchor's edge rows minus (k-2) copies of its singleton row."""
    full = clawfree_full_ef(g, 3)
    reduced = clawfree_reduced_ef(g, 3)
    cliques = g.enumerate_cliques(include_empty=False)
    red_rows = {}
    for eq in reduced.system.equations:
        support = tuple(sorted(n for n in eq.coeffs if n.path[:1] == ("x",)))
        red_rows[support] = eq
    for row, clique in zip(full.system.equations, cliques):
        if len(clique) < 3:
            continue
        anchor = min(clique)
        combo: dict = {}
        rhs = Fraction(0)

        def add(eq: LinearConstraint, scale: int) -> None:
            nonlocal rhs
            for name, c in eq.coeffs.items():
                combo[name] = combo.get(name, Fraction(0)) + scale * c
            rhs += scale * eq.rhs

        for other in clique:
            if other != anchor:
                key = tuple(sorted((vertex_var(g.names[anchor]), vertex_var(g.names[other]))))
                add(red_rows[key], 1)
        add(red_rows[(vertex_var(g.names[anchor]),)], -(len(clique) - 2))
        combo = {n: c for n, c in combo.items() if c}
        assert combo == dict(row.coeffs) and rhs == row.rhs


def test_clawfree_stab_vertices_extend():
    g = Graph.of(4, [(0, 1), (1, 2), (2, 0), (2, 3)])
    for form in (clawfree_full_ef(g, 3), clawfree_reduced_ef(g, 3)):
        for s in g.enumerate_stable_sets(include_empty=True):
            point = {vertex_var(nm): Fraction(i in s) for i, nm in enumerate(g.names)}
            assert LpProgram(form.system, fix=point).feasibility().status == OPTIMAL


# ------------------------------------------------------------ comparability


def three_chain() -> Poset:
    return Poset.of(3, [(0, 1), (1, 2)], names=("a", "b", "c"))


def test_comparability_chain_reduced():
    form = comparability_reduced_ef(three_chain())
    assert len(form.system.equations) == 6  # three singles, three pairs
    obj = {vertex_var(n): Fraction(1) for n in "abc"}
    res = LpProgram(form.system).solve(obj, "max")
    assert res.status == OPTIMAL and res.value == 1


def test_comparability_antichain_is_cube():
    poset = Poset.of(3, [], names=("a", "b", "c"))
    form = comparability_reduced_ef(poset)
    assert len(form.system.equations) == 3
    xs = vertex_vars(poset.comparability_graph())
    shadow = fourier_motzkin(form.system, xs, cap=len(form.system.variables))
    cube = LinearSystem.of(xs, box_rows(xs, 0, 1))
    equal, witness = systems_equal_lp(shadow, cube)
    assert equal, witness


def test_comparability_two_chain_full_equals_reduced():
    poset = Poset.of(2, [(0, 1)], names=("a", "b"))
    full = comparability_full_ef(poset)
    reduced = comparability_reduced_ef(poset)
    assert set(map(str, full.system.constraints())) == set(
        map(str, reduced.system.constraints())
    )


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_comparability_chain_rows_tight(seed):
    rng = random.Random(500 + seed)
    n = rng.randint(3, 6)
    relations = [(a, b) for a, b in combinations(range(n), 2) if rng.random() < 0.4]
    poset = Poset.of(n, relations)
    form = comparability_reduced_ef(poset)
    prog = LpProgram(form.system)
    for chain in poset.chains(include_empty=False):
        obj = {vertex_var(poset.names[v]): Fraction(1) for v in chain}
        res = prog.solve(obj, "max")
        assert res.status == OPTIMAL and res.value == 1
