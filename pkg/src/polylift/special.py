"""Closed-form constructions: min-up/min-down polytopes, reduced
formulations for graphs without large induced stars, and comparability
graphs.

Min-up/min-down vectors are 0/1 strings whose internal one-blocks have
length at least `min_up` and internal zero-blocks at least `min_down`
(leading and trailing blocks are free). The facet description consists of
two alternating families; the sign pattern starting negative is valid
exactly on spans up to `min_up` (it forbids a short internal one-block) and
the pattern starting positive on spans up to `min_down`. The lifted
formulation follows a three-round conversation: pick the family, pick the
smallest row index, then fix the whole window to one of the few 0/1
patterns a feasible string can show there.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .core import LinearConstraint, LinearSystem, VarName
from .formulation import Formulation, box_rows
from .graphs import Graph, Poset, vertex_var, vertex_vars
from .protocol import ALICE, BOB, LEAF, ProtocolTree, compile_tree, factorization_formulation

__all__ = [
    "MinUpDownInstance",
    "mud_var",
    "mud_vertices",
    "mud_facets",
    "mud_tree",
    "mud_ef",
    "NotStarFreeError",
    "star_graph",
    "clawfree_rectangles",
    "clique_anchor_rectangles",
    "rectangle_var",
    "clawfree_full_ef",
    "clawfree_reduced_ef",
    "chain_cert_vars",
    "comparability_full_ef",
    "comparability_reduced_ef",
]


@dataclass(frozen=True)
class MinUpDownInstance:
    horizon: int
    min_down: int
    min_up: int

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.min_down < 1 or self.min_up < 1:
            raise ValueError("all instance parameters must be positive")
        if self.min_up > self.horizon or self.min_down > self.horizon:
            raise ValueError("block lengths cannot exceed the horizon")


def mud_var(i: int) -> VarName:
    """Coordinate variable for period i (1-based)."""
    return VarName(("x",), "t%d" % i)


def _switches(bits: Sequence[int]) -> list[tuple[int, str]]:
    out = []
    for i in range(len(bits) - 1):
        if bits[i] == 0 and bits[i + 1] == 1:
            out.append((i + 1, "on"))
        elif bits[i] == 1 and bits[i + 1] == 0:
            out.append((i + 1, "off"))
    return out


def mud_vertices(inst: MinUpDownInstance) -> list[tuple[int, ...]]:
    """All feasible 0/1 strings, by exhaustive check of every switch pair."""
    T = inst.horizon
    if T > 20:
        raise ValueError("vertex enumeration is limited to horizon <= 20")
    out = []
    for code in range(1 << T):
        bits = tuple((code >> (T - 1 - j)) & 1 for j in range(T))
        sw = _switches(bits)
        ok = True
        for a in range(len(sw)):
            for b in range(a + 1, len(sw)):
                i, kind_i = sw[a]
                j, _ = sw[b]
                need = inst.min_up if kind_i == "on" else inst.min_down
                if j - i < need:
                    ok = False
        if ok:
            out.append(bits)
    return out


def _family_rows(T: int, span: int, first_sign: int) -> list[LinearConstraint]:
    rhs = 0 if first_sign < 0 else 1
    rows = []
    for i1 in range(1, T + 1):
        tail = range(i1 + 1, min(i1 + span, T) + 1)
        for extra in range(0, len(tail) + 1, 2):
            for rest in combinations(tail, extra):
                idx = (i1, *rest)
                coeffs = {
                    mud_var(i): Fraction(first_sign * (-1) ** j)
                    for j, i in enumerate(idx)
                }
                rows.append(LinearConstraint.le(coeffs, rhs))
    return rows


def mud_facets(inst: MinUpDownInstance) -> LinearSystem:
    """Alternating odd-support rows: start-negative rows on spans up to
    min_up (right-hand side 0), start-positive rows on spans up to min_down
    (right-hand side 1)."""
    T = inst.horizon
    rows = _family_rows(T, inst.min_up, -1) + _family_rows(T, inst.min_down, +1)
    return LinearSystem.of([mud_var(i) for i in range(1, T + 1)], rows)


def _window_patterns(bit: int, m: int, allow_return: bool) -> list[tuple[int, ...]]:
    """0/1 strings of length m starting with `bit`, flipping at most once,
    and flipping back only when allowed."""
    out = [(bit,) * m]
    for p in range(1, m):
        if allow_return:
            for q in range(1, m - p + 1):
                out.append((bit,) * p + (1 - bit,) * q + (bit,) * (m - p - q))
        else:
            out.append((bit,) * p + (1 - bit,) * (m - p))
    return out


def mud_tree(inst: MinUpDownInstance) -> ProtocolTree:
    T = inst.horizon
    all_vars = [mud_var(i) for i in range(1, T + 1)]

    # Leaves carry only the window-fixing equations, no box: every facet row
    # routed to a leaf has its support inside that leaf's window, where all
    # coordinates are fixed, and all siblings under one union node fix the
    # same window, so the union stays valid without per-leaf bounds. This
    # keeps the inequality count proportional to the leaf count.
    def leaf(i1: int, pattern: Sequence[int], tag: str) -> ProtocolTree:
        eqs = [
            LinearConstraint.eq({mud_var(i1 + off): 1}, pattern[off])
            for off in range(len(pattern))
        ]
        form = Formulation.of(all_vars, (), (), eqs)
        return ProtocolTree(sender=LEAF, leaf_ef=form, label=tag)

    def family(span: int, straight_bit: int, fam_tag: str) -> ProtocolTree:
        # the bit whose block constraint matches the window cannot flip back
        index_children = []
        for i1 in range(1, T + 1):
            m = min(i1 + span, T) - i1 + 1
            children = []
            for bit in (0, 1):
                for pat in _window_patterns(bit, m, bit != straight_bit):
                    tag = "w" + "".join(str(b) for b in pat)
                    children.append((tag, leaf(i1, pat, "%s;i%d;%s" % (fam_tag, i1, tag))))
            children.sort(key=lambda item: item[0])
            index_children.append(("i%d" % i1, ProtocolTree(sender=BOB, children=tuple(children))))
        return ProtocolTree(sender=ALICE, children=tuple(index_children))

    return ProtocolTree(
        sender=ALICE,
        children=(
            ("f1", family(inst.min_up, 0, "f1")),
            ("f2", family(inst.min_down, 1, "f2")),
        ),
    )


def mud_ef(inst: MinUpDownInstance) -> Formulation:
    # leaves are coordinate fixings, nonempty by construction; balanced
    # folds keep the copy paths logarithmic in the per-window leaf count
    return compile_tree(mud_tree(inst), balanced=True, check_nonempty=False)


# ----------------------------------------------------------------------
# graphs without K_{1,t}

class NotStarFreeError(ValueError):
    pass


def star_graph(t: int) -> Graph:
    """K_{1,t}, center first."""
    if t < 1:
        raise ValueError("star needs at least one leaf")
    return Graph.of(t + 1, [(0, i) for i in range(1, t + 1)])


def _check_star_free(graph: Graph, t: int) -> None:
    if t < 3:
        raise ValueError("star bound t must be at least 3")
    if graph.contains_induced(star_graph(t)):
        raise NotStarFreeError("graph contains an induced %d-leaf star" % t)


def clawfree_rectangles(graph: Graph, t: int = 3) -> list[tuple[int, frozenset]]:
    """All pairs (v, U) with U a stable subset of N(v) of size < t: the
    all-ones rectangles of the first-clique-vertex conversation."""
    _check_star_free(graph, t)
    out: list[tuple[int, frozenset]] = []
    for v in graph.vertices():
        nbrs = sorted(graph.neighbors(v))
        for size in range(0, t):
            for combo in combinations(nbrs, size):
                if graph.is_stable(combo):
                    out.append((v, frozenset(combo)))
    return out


def clique_anchor_rectangles(
    graph: Graph, rectangles: Sequence[tuple[int, frozenset]], clique: Iterable[int]
) -> list[int]:
    """Indices of the rectangles covering a clique's row: anchored at its
    smallest vertex and avoiding it."""
    members = set(clique)
    if not members:
        raise ValueError("empty clique has no covering rectangles")
    anchor = min(members)
    return [
        i
        for i, (v, stable) in enumerate(rectangles)
        if v == anchor and not (stable & members)
    ]


def rectangle_var(graph: Graph, v: int, stable: frozenset) -> VarName:
    return VarName(("y", graph.names[v], *sorted(graph.names[u] for u in stable)), "r")


def _with_vertex_nonneg(graph: Graph, form: Formulation) -> Formulation:
    nonneg = [LinearConstraint.le({vertex_var(n): -1}, 0) for n in graph.names]
    return Formulation.of(
        form.original_vars,
        form.aux_vars,
        [*nonneg, *form.system.inequalities],
        form.system.equations,
    )


def clawfree_full_ef(graph: Graph, t: int = 3) -> Formulation:
    """One tight equation per nonempty clique; equation i belongs to the
    i-th entry of enumerate_cliques."""
    rects = clawfree_rectangles(graph, t)
    cliques = graph.enumerate_cliques(include_empty=False)
    q_rows = [
        LinearConstraint.le({vertex_var(graph.names[v]): 1 for v in c}, 1)
        for c in cliques
    ]
    q_system = LinearSystem.of(vertex_vars(graph), q_rows)
    cover: list[list[int]] = [[] for _ in rects]
    for row, clique in enumerate(cliques):
        for i in clique_anchor_rectangles(graph, rects, clique):
            cover[i].append(row)
    triples = [
        (rectangle_var(graph, v, stable), frozenset(cover[i]), 1)
        for i, (v, stable) in enumerate(rects)
    ]
    return _with_vertex_nonneg(graph, factorization_formulation(triples, q_system))


def clawfree_reduced_ef(graph: Graph, t: int = 3) -> Formulation:
    """Keeps only the singleton and edge equations over the same rectangle
    variables; larger cliques' rows are linear combinations of these."""
    rects = clawfree_rectangles(graph, t)
    yvars = [rectangle_var(graph, v, stable) for v, stable in rects]
    eqs = []
    for v in graph.vertices():
        coeffs: dict[VarName, Fraction] = {vertex_var(graph.names[v]): Fraction(1)}
        for i in clique_anchor_rectangles(graph, rects, (v,)):
            coeffs[yvars[i]] = Fraction(1)
        eqs.append(LinearConstraint.eq(coeffs, 1))
    for u, w in graph.edges():
        coeffs = {
            vertex_var(graph.names[u]): Fraction(1),
            vertex_var(graph.names[w]): Fraction(1),
        }
        for i in clique_anchor_rectangles(graph, rects, (u, w)):
            coeffs[yvars[i]] = Fraction(1)
        eqs.append(LinearConstraint.eq(coeffs, 1))
    ineqs = [LinearConstraint.le({n: -1}, 0) for n in vertex_vars(graph)]
    ineqs += [LinearConstraint.le({y: -1}, 0) for y in yvars]
    return Formulation.of(vertex_vars(graph), yvars, ineqs, eqs)


# ----------------------------------------------------------------------
# comparability graphs

def chain_cert_vars(poset: Poset, chain: Sequence[int]) -> list[VarName]:
    """Certificate variables appearing in a chain's tight equation: one
    marker for the bottom element, one per consecutive pair, one for the
    top element."""
    ordered = poset.sort_chain(chain)
    if not ordered:
        raise ValueError("empty chain has no certificate")
    names = poset.names
    out = [VarName(("y", "bot"), names[ordered[0]])]
    for a, b in zip(ordered, ordered[1:]):
        out.append(VarName(("y", "mid", names[a]), names[b]))
    out.append(VarName(("y", "top"), names[ordered[-1]]))
    return out


def _comparability_build(poset: Poset, chains: list[tuple[int, ...]]) -> Formulation:
    graph = poset.comparability_graph()
    q_rows = [
        LinearConstraint.le({vertex_var(poset.names[v]): 1 for v in c}, 1)
        for c in chains
    ]
    q_system = LinearSystem.of(vertex_vars(graph), q_rows)
    cover: dict[VarName, set[int]] = {}
    for row, chain in enumerate(chains):
        for name in chain_cert_vars(poset, chain):
            cover.setdefault(name, set()).add(row)
    # certificates never used by any kept chain would be dangling; include
    # every pair/endpoint certificate that some kept chain mentions
    triples = [(name, frozenset(rows), 1) for name, rows in sorted(cover.items())]
    return _with_vertex_nonneg(graph, factorization_formulation(triples, q_system))


def comparability_full_ef(poset: Poset) -> Formulation:
    """One tight equation per nonempty chain."""
    return _comparability_build(poset, poset.chains(include_empty=False))


def comparability_reduced_ef(poset: Poset) -> Formulation:
    """Equations only for single elements and comparable pairs; longer
    chains' rows follow by telescoping."""
    chains = [c for c in poset.chains(include_empty=False) if len(c) <= 2]
    return _comparability_build(poset, chains)
