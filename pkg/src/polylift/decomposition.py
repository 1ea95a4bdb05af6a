"""Decomposition trees over induced subgraphs: closed-neighborhood splits,
complement steps compiled through polarity, the general quasi-polynomial
builder, and the pattern-free builder for threshold patterns.

Nodes name a vertex subset of one fixed root graph plus a complement parity;
the node's graph is the induced subgraph, complemented when the parity is
odd. Split children follow the closed-neighborhood chain: child j keeps
N+(v_j) minus the earlier branch vertices, child 0 keeps the rest, so every
clique of the node survives in some child. Complement children compile to a
polarity step, splits to a juxtaposition over the node's vertex space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .formulation import Formulation, embed, juxtapose, polar_eta
from .graphs import Graph, vertex_vars
from .protocol import CompileError
from .verify import qstab_formulation

__all__ = [
    "DecompositionError",
    "NotThresholdError",
    "DegeneratePatternError",
    "HFreenessError",
    "LEAF_NODE",
    "COMPLEMENT_NODE",
    "SPLIT_NODE",
    "DecompositionNode",
    "node_graph",
    "split",
    "build_general_tree",
    "build_threshold_tree",
    "compile_decomposition",
    "decomposition_census",
]

LEAF_NODE = "leaf"
COMPLEMENT_NODE = "complement"
SPLIT_NODE = "split"


class DecompositionError(ValueError):
    pass


class NotThresholdError(DecompositionError):
    """The pattern's vertex order is not a threshold witness."""


class DegeneratePatternError(DecompositionError):
    """Patterns on less than two vertices admit no meaningful tree."""


class HFreenessError(DecompositionError):
    """The input graph contains an induced copy of the pattern."""

    def __init__(self, witness: tuple[str, ...]):
        self.witness = witness
        super().__init__(
            "input contains the forbidden pattern, induced by (%s)"
            % ", ".join(witness)
        )


@dataclass(frozen=True)
class DecompositionNode:
    kind: str
    subset: tuple[int, ...]
    parity: int
    children: tuple["DecompositionNode", ...] = ()
    split_vertices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (LEAF_NODE, COMPLEMENT_NODE, SPLIT_NODE):
            raise ValueError("unknown node kind %r" % self.kind)
        if self.kind == LEAF_NODE and self.children:
            raise ValueError("leaf with children")
        if self.kind == COMPLEMENT_NODE and len(self.children) != 1:
            raise ValueError("complement node needs exactly one child")

    def iter_nodes(self):
        yield self
        for child in self.children:
            yield from child.iter_nodes()


def node_graph(graph: Graph, node: DecompositionNode) -> Graph:
    out = graph.induced(node.subset)
    return out.complement() if node.parity % 2 else out


def split(graph: Graph, vertices: Sequence[int]) -> tuple[Graph, ...]:
    """Closed-neighborhood split: piece 0 is everything off the chosen
    vertices, piece j is N+(v_j) minus the earlier chosen ones."""
    chosen = list(vertices)
    if len(set(chosen)) != len(chosen):
        raise DecompositionError("split vertices must be distinct")
    for v in chosen:
        if not 0 <= v < graph.n:
            raise DecompositionError("split vertex %d out of range" % v)
    pieces = [graph.induced(sorted(set(graph.vertices()) - set(chosen)))]
    for j, v in enumerate(chosen):
        keep = (graph.neighbors(v) | {v}) - set(chosen[:j])
        pieces.append(graph.induced(sorted(keep)))
    return tuple(pieces)


def _oriented_neighbors(graph: Graph, subset: frozenset, parity: int, v: int) -> set:
    inside = graph.neighbors(v) & subset
    if parity % 2 == 0:
        return set(inside)
    return set(subset) - set(inside) - {v}


def _low_vertices(graph: Graph, subset: frozenset, parity: int) -> list[int]:
    return [
        v
        for v in sorted(subset)
        if 2 * len(_oriented_neighbors(graph, subset, parity, v)) <= len(subset)
    ]


def _split_children(
    graph: Graph, subset: frozenset, parity: int, branch: Sequence[int]
) -> list[tuple[int, ...]]:
    """Child subsets (rest first, then one per branch vertex); empty rest is
    dropped since it carries no cliques."""
    out = []
    rest = tuple(sorted(subset - set(branch)))
    if rest:
        out.append(rest)
    for j, v in enumerate(branch):
        keep = (_oriented_neighbors(graph, subset, parity, v) | {v}) - set(branch[:j])
        out.append(tuple(sorted(keep)))
    return out


def _general(graph: Graph, subset: frozenset, parity: int, c: int) -> DecompositionNode:
    members = tuple(sorted(subset))
    if len(subset) <= c:
        return DecompositionNode(LEAF_NODE, members, parity)
    low = _low_vertices(graph, subset, parity)
    # adjacent pair with c=1: the split would reproduce the node; complement
    # makes the pair disconnected and the next split separates it
    stuck_pair = len(subset) == 2 and len(low) == 2 and len(
        _oriented_neighbors(graph, subset, parity, members[0])
    ) == 1
    if 2 * len(low) >= len(subset) and not stuck_pair:
        children = tuple(
            _general(graph, frozenset(part), parity, c)
            for part in _split_children(graph, subset, parity, low)
        )
        return DecompositionNode(SPLIT_NODE, members, parity, children, tuple(low))
    child = _general(graph, subset, parity + 1, c)
    return DecompositionNode(COMPLEMENT_NODE, members, parity, (child,))


def build_general_tree(graph: Graph, c: int = 2) -> DecompositionNode:
    """Split on all low-degree vertices when they cover at least half the
    node, otherwise complement; stop at `c` vertices."""
    if c < 1:
        raise DecompositionError("leaf size must be at least 1")
    return _general(graph, frozenset(graph.vertices()), 0, c)


# ----------------------------------------------------------------------
# threshold patterns

def _threshold_relations(pattern: Graph) -> list[bool]:
    """relation[i] is True when pattern vertex i is complete to all later
    ones, False when anticomplete; anything mixed is rejected."""
    rels = []
    for i in range(pattern.n - 1):
        later = range(i + 1, pattern.n)
        links = [pattern.adjacent(i, j) for j in later]
        if all(links):
            rels.append(True)
        elif not any(links):
            rels.append(False)
        else:
            raise NotThresholdError(
                "pattern vertex %s is neither complete nor anticomplete to "
                "the later vertices" % pattern.names[i]
            )
    return rels


def _verify_copy(graph: Graph, pattern: Graph, vertices: Sequence[int]) -> bool:
    if len(set(vertices)) != pattern.n:
        return False
    for i in range(pattern.n):
        for j in range(i + 1, pattern.n):
            if graph.adjacent(vertices[i], vertices[j]) != pattern.adjacent(i, j):
                return False
    return True


def build_threshold_tree(graph: Graph, pattern: Graph) -> DecompositionNode:
    """Pattern-free decomposition to singleton leaves.

    Level i branches on every vertex not branched earlier on the path,
    oriented so that the branch vertex plays pattern vertex i (a complement
    child is inserted only when the parity disagrees with the pattern
    vertex's complete/anticomplete type). Vertices branched at earlier
    levels fall into a residual child. A node surviving all branch levels
    with two or more vertices either yields a fresh vertex, completing an
    induced copy of the pattern (reported as an error), or consists of old
    branch vertices only, a constant-size set that is decomposed to
    singletons by the general splitter.
    """
    if pattern.n <= 1:
        raise DegeneratePatternError(
            "pattern needs at least two vertices; nothing but the empty "
            "graph avoids a single-vertex pattern"
        )
    rels = _threshold_relations(pattern)
    t = pattern.n

    def finish(subset: frozenset, parity: int) -> DecompositionNode:
        return _general(graph, subset, parity, 1)

    def descend(
        subset: frozenset, parity: int, level: int, chain: tuple[int, ...]
    ) -> DecompositionNode:
        members = tuple(sorted(subset))
        if len(subset) <= 1:
            return DecompositionNode(LEAF_NODE, members, parity)
        if level == t - 1:
            fresh = sorted(subset - set(chain))
            if fresh:
                witness = chain + (fresh[0],)
                if not _verify_copy(graph, pattern, witness):
                    found = graph.find_induced_copy(pattern)
                    if found is None:
                        raise DecompositionError(
                            "branch chain failed to induce the pattern and "
                            "no copy exists; construction bug"
                        )
                    witness = found
                raise HFreenessError(tuple(graph.names[v] for v in witness))
            return finish(subset, parity)
        if rels[level] != (parity % 2 == 0):
            child = descend(subset, parity + 1, level, chain)
            return DecompositionNode(COMPLEMENT_NODE, members, parity, (child,))
        candidates = [v for v in sorted(subset) if v not in chain]
        if not candidates:
            return finish(subset, parity)
        parts = _split_children(graph, subset, parity, candidates)
        children = []
        rest = len(parts) - len(candidates)  # 1 when a residual child exists
        for idx, part in enumerate(parts):
            if idx < rest:
                children.append(finish(frozenset(part), parity))
            else:
                v = candidates[idx - rest]
                children.append(
                    descend(frozenset(part), parity, level + 1, chain + (v,))
                )
        return DecompositionNode(
            SPLIT_NODE, members, parity, tuple(children), tuple(candidates)
        )

    return descend(frozenset(graph.vertices()), 0, 0, ())


# ----------------------------------------------------------------------
# compilation

def compile_decomposition(
    graph: Graph,
    tree: DecompositionNode,
    leaf_efs: Mapping[DecompositionNode, Formulation] | None = None,
) -> Formulation:
    """Bottom-up: leaves take their given formulation (default: the clique
    formulation of the leaf's graph), complement nodes take the polar at
    budget 1, splits juxtapose the children embedded into the node's space.
    Consecutive complements cancel and are skipped."""

    def rec(node: DecompositionNode) -> Formulation:
        if node.kind == LEAF_NODE:
            g = node_graph(graph, node)
            if leaf_efs is not None and node in leaf_efs:
                form = leaf_efs[node]
            elif leaf_efs is not None:
                raise CompileError(
                    "missing leaf formulation for subset %s" % (node.subset,)
                )
            else:
                form = qstab_formulation(g)
            if set(form.original_vars) != set(vertex_vars(g)):
                raise CompileError("leaf formulation on the wrong variables")
            return form
        if node.kind == COMPLEMENT_NODE:
            child = node.children[0]
            if child.kind == COMPLEMENT_NODE:
                return rec(child.children[0])
            return polar_eta(rec(child), 1, check_nonempty=False)
        parts = [rec(child) for child in node.children]
        ambient = vertex_vars(node_graph(graph, node))
        embedded = [embed(p, ambient) for p in parts]
        if len(embedded) == 1:
            return embedded[0]
        return juxtapose(embedded, tags=["p%d" % i for i in range(len(embedded))])

    return rec(tree)


def decomposition_census(tree: DecompositionNode) -> dict:
    nodes = list(tree.iter_nodes())
    leaves = [n for n in nodes if n.kind == LEAF_NODE]

    def depth(node: DecompositionNode) -> int:
        return 1 + max((depth(c) for c in node.children), default=0)

    return {
        "nodes": len(nodes),
        "leaves": len(leaves),
        "splits": sum(1 for n in nodes if n.kind == SPLIT_NODE),
        "complements": sum(1 for n in nodes if n.kind == COMPLEMENT_NODE),
        "max_leaf_size": max((len(n.subset) for n in leaves), default=0),
        "depth": depth(tree),
    }
