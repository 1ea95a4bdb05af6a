"""Vertex-exchange protocol for stable-set versus clique slack, and the
extended formulation compiled from its communication tree.

Alice holds a clique, Bob a stable set; they decide whether the two meet.
Each stage splits the surviving vertices into low degree L (twice the degree
is at most the vertex count) and high degree H. If |L| covers at least half
the survivors Alice speaks, else Bob. The speaker names the lowest-ranked
vertex of their input inside their own pool, or says "none". A named vertex
is either confirmed by the responder (the sets meet, slack 0) or the
survivors shrink to the speaker's side of that vertex's neighborhood; after
"none" the responder either declares their pool empty (the sets are disjoint,
slack 1) or play moves to the responder's pool. Every stage at least halves
the survivors, which bounds how many vertices a run can name.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import LinearConstraint, is_satisfied
from .formulation import Formulation, box_rows, size_metrics
from .graphs import Graph, vertex_var, vertex_vars
from .protocol import ALICE, BOB, LEAF, ProtocolTree, compile_tree

__all__ = [
    "ProtocolError",
    "LeafValueError",
    "StageRecord",
    "Transcript",
    "YRectangle",
    "enumeration_bound",
    "run_protocol",
    "enumerate_rectangles",
    "build_tree",
    "rectangle_contains_clique",
    "rectangle_contains_stable",
    "leaf_ef",
    "build_stab_qstab_ef",
]


class ProtocolError(ValueError):
    """Invalid protocol input or a broken construction invariant."""


class LeafValueError(RuntimeError):
    """A slack-0 leaf whose minimal clique and stable set do not meet in
    exactly one vertex; signals a construction bug."""


REPLY_ORDER = {"hit": 0, "miss": 1, "empty": 0, "go": 1}


@dataclass(frozen=True)
class StageRecord:
    speaker: str  # ALICE or BOB
    live: tuple[int, ...]  # surviving vertices entering the stage
    low: tuple[int, ...]
    high: tuple[int, ...]
    sent: int | None  # vertex index, None for the "none" message
    reply: str  # hit | miss | empty | go


@dataclass(frozen=True)
class Transcript:
    stages: tuple[StageRecord, ...]
    outcome: str  # "intersect" | "disjoint"
    path: tuple[str, ...]  # edge tags, two per stage
    senders: tuple[str, ...]  # sender of the node each path edge leaves

    @property
    def value(self) -> int:
        return 0 if self.outcome == "intersect" else 1


@dataclass(frozen=True)
class YRectangle:
    """One leaf's identity: the vertices each side named during the run
    (a confirmed vertex counts on both sides) plus the slack value.

    On a path without "go" replies this pair is the unique inclusion-minimal
    input reaching the leaf and replays to it. A "go" reply certifies an
    unnamed pool vertex, so such leaves need one extra input vertex per "go"
    to be reached, and distinct leaves may share the same named sets.
    """

    clique: tuple[int, ...]
    stable: tuple[int, ...]
    value: int
    path: tuple[str, ...]

    @property
    def combined_size(self) -> int:
        return len(self.clique) + len(self.stable)

    def to_json(self, graph: Graph) -> dict:
        return {
            "clique": [graph.names[v] for v in self.clique],
            "stable": [graph.names[v] for v in self.stable],
            "value": self.value,
            "path": list(self.path),
        }


def enumeration_bound(n: int) -> int:
    """Combined input size that reaches every leaf on an n-vertex graph.

    A run names a vertex only while survivors remain, and every named-vertex
    stage at least halves the survivor count, so at most floor(log2 n) + 1
    vertices are named; a confirmed final vertex counts on both sides, adding
    one more. Exact for K1 and K2, where confirmed single vertices already
    need combined size 2 and 3.
    """
    return 0 if n == 0 else n.bit_length() + 1


def _check_rank(graph: Graph, order: Sequence[int] | None) -> list[int]:
    if order is None:
        return list(range(graph.n))
    if sorted(order) != list(range(graph.n)):
        raise ProtocolError("order must be a permutation of all vertex indices")
    rank = [0] * graph.n
    for pos, v in enumerate(order):
        rank[v] = pos
    return rank


def run_protocol(
    graph: Graph,
    clique: Iterable[int],
    stable: Iterable[int],
    order: Sequence[int] | None = None,
    inclusive_neighborhood: bool = False,
) -> Transcript:
    """Simulate one run. `order` reranks vertices for the "lowest index"
    choices; `inclusive_neighborhood` keeps the named vertex among the
    survivors (which voids the halving guarantee, hence also the bound used
    for tree reconstruction)."""
    c_set = frozenset(clique)
    s_set = frozenset(stable)
    if not graph.is_clique(c_set):
        raise ProtocolError("first input is not a clique")
    if not graph.is_stable(s_set):
        raise ProtocolError("second input is not a stable set")
    rank = _check_rank(graph, order)

    live = set(graph.vertices())
    named: set[int] = set()
    stages: list[StageRecord] = []
    path: list[str] = []
    senders: list[str] = []
    outcome: str | None = None

    while outcome is None:
        low = {v for v in live if 2 * len(graph.neighbors(v) & live) <= len(live)}
        high = live - low
        alice_turn = 2 * len(low) >= len(live)
        speaker, responder = (ALICE, BOB) if alice_turn else (BOB, ALICE)
        pool, other_pool = (low, high) if alice_turn else (high, low)
        own = (c_set if alice_turn else s_set) & pool - named
        other = s_set if alice_turn else c_set

        rec = dict(
            speaker=speaker,
            live=tuple(sorted(live)),
            low=tuple(sorted(low)),
            high=tuple(sorted(high)),
        )
        if own:
            v = min(own, key=rank.__getitem__)
            named.add(v)
            senders += [speaker, responder]
            path.append("v%d" % v)
            if v in other:
                path.append("hit")
                outcome = "intersect"
                stages.append(StageRecord(sent=v, reply="hit", **rec))
            else:
                path.append("miss")
                if alice_turn:
                    keep = live & graph.neighbors(v)
                else:
                    keep = live - graph.neighbors(v) - {v}
                if inclusive_neighborhood:
                    keep = keep | {v}
                dropped_pool = {u for u in pool if rank[u] < rank[v]}
                live = keep - dropped_pool
                stages.append(StageRecord(sent=v, reply="miss", **rec))
        else:
            senders += [speaker, responder]
            path.append("none")
            if not (other & other_pool):
                path.append("empty")
                outcome = "disjoint"
                stages.append(StageRecord(sent=None, reply="empty", **rec))
            else:
                path.append("go")
                live = set(other_pool)
                stages.append(StageRecord(sent=None, reply="go", **rec))

    return Transcript(tuple(stages), outcome, tuple(path), tuple(senders))


def _sent_sets(t: Transcript) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Minimal (clique, stable set) reaching the transcript's leaf: every
    named vertex on the namer's side, plus the confirmed vertex on both."""
    alice: set[int] = set()
    bob: set[int] = set()
    for st in t.stages:
        if st.sent is None:
            continue
        (alice if st.speaker == ALICE else bob).add(st.sent)
        if st.reply == "hit":
            (bob if st.speaker == ALICE else alice).add(st.sent)
    return tuple(sorted(alice)), tuple(sorted(bob))


def _assemble(graph: Graph, order: Sequence[int] | None):
    bound = enumeration_bound(graph.n)
    rank = _check_rank(graph, order)
    leaves: dict[tuple[str, ...], YRectangle] = {}
    trie: dict = {"children": {}, "sender": None}
    pairs = 0

    for c in graph.enumerate_cliques(max_size=bound, include_empty=True):
        for s in graph.enumerate_stable_sets(max_size=bound - len(c), include_empty=True):
            pairs += 1
            t = run_protocol(graph, c, s, order)
            cr, sr = _sent_sets(t)
            rect = YRectangle(cr, sr, t.value, t.path)
            prior = leaves.get(t.path)
            if prior is None:
                leaves[t.path] = rect
            elif prior != rect:
                raise ProtocolError(
                    "leaf %r reached with conflicting rectangles" % (t.path,)
                )
            node = trie
            for tag, sender in zip(t.path, t.senders):
                if node["sender"] is None:
                    node["sender"] = sender
                elif node["sender"] != sender:
                    raise ProtocolError("inconsistent speaker at a shared prefix")
                node = node["children"].setdefault(tag, {"children": {}, "sender": None})

    for rect in leaves.values():
        if "go" in rect.path:
            continue  # named sets alone cannot trigger the "go" replies
        replay = run_protocol(graph, rect.clique, rect.stable, order)
        if replay.path != rect.path:
            raise ProtocolError("named pair does not reproduce its go-free leaf")

    def edge_order(tag: str) -> tuple:
        if tag in REPLY_ORDER:
            return (0, REPLY_ORDER[tag], "")
        if tag == "none":
            return (1, 0, "")
        return (0, rank[int(tag[1:])], tag)

    def to_tree(node: dict, path: tuple[str, ...]) -> ProtocolTree:
        if node["children"] and path in leaves:
            raise ProtocolError("a complete path is a prefix of another")
        if not node["children"]:
            rect = leaves[path]
            return ProtocolTree(
                sender=LEAF,
                children=(),
                value=Fraction(rect.value),
                leaf_ef=leaf_ef(graph, rect, order),
                label="C=%s;S=%s"
                % (
                    ",".join(graph.names[v] for v in rect.clique),
                    ",".join(graph.names[v] for v in rect.stable),
                ),
            )
        tags = sorted(node["children"], key=edge_order)
        return ProtocolTree(
            sender=node["sender"],
            children=tuple(
                (tag, to_tree(node["children"][tag], path + (tag,))) for tag in tags
            ),
        )

    return to_tree(trie, ()), leaves, pairs


def build_tree(graph: Graph, order: Sequence[int] | None = None) -> ProtocolTree:
    """Reconstruct the full communication tree by running the protocol on
    every input pair up to the combined-size bound and merging the paths.
    Leaves carry their formulations and a clique/stable-set label."""
    tree, _, _ = _assemble(graph, order)
    return tree


def enumerate_rectangles(
    graph: Graph, order: Sequence[int] | None = None
) -> tuple[YRectangle, ...]:
    _, leaves, _ = _assemble(graph, order)
    return tuple(leaves[path] for path in sorted(leaves))


def rectangle_contains_clique(
    graph: Graph,
    rect: YRectangle,
    clique: Iterable[int],
    order: Sequence[int] | None = None,
) -> bool:
    """Does (clique, rect.stable) replay to this rectangle's leaf?"""
    return run_protocol(graph, clique, rect.stable, order).path == rect.path


def rectangle_contains_stable(
    graph: Graph,
    rect: YRectangle,
    stable: Iterable[int],
    order: Sequence[int] | None = None,
) -> bool:
    return run_protocol(graph, rect.clique, stable, order).path == rect.path


def leaf_ef(
    graph: Graph, rect: YRectangle, order: Sequence[int] | None = None
) -> Formulation:
    """Box plus fixings: zero on every named clique vertex and on every
    vertex whose addition to the minimal clique replays into the same leaf;
    on a slack-0 leaf the confirmed vertex is fixed to one instead."""
    variables = vertex_vars(graph)
    ones: set[int] = set()
    zeros = set(rect.clique)
    if rect.value == 0:
        meet = set(rect.clique) & set(rect.stable)
        if len(meet) != 1:
            raise LeafValueError(
                "slack-0 leaf with |C∩S| = %d, expected 1" % len(meet)
            )
        (u,) = meet
        zeros.discard(u)
        ones.add(u)
    for v in graph.vertices():
        if v in rect.clique:
            continue
        extended = tuple(sorted(set(rect.clique) | {v}))
        if not graph.is_clique(extended):
            continue
        if rectangle_contains_clique(graph, rect, extended, order):
            zeros.add(v)
    equations = [
        LinearConstraint.eq({vertex_var(graph.names[v]): 1}, 0) for v in sorted(zeros)
    ] + [LinearConstraint.eq({vertex_var(graph.names[v]): 1}, 1) for v in sorted(ones)]
    return Formulation.of(variables, (), box_rows(variables, 0, 1), equations)


def _leaf_witness_ok(graph: Graph, rect: YRectangle, ef: Formulation) -> bool:
    # the indicator of the minimal stable set always lies in the leaf set
    point = {
        vertex_var(name): Fraction(1 if v in rect.stable else 0)
        for v, name in enumerate(graph.names)
    }
    return is_satisfied(ef.system, point)


def build_stab_qstab_ef(
    graph: Graph,
    order: Sequence[int] | None = None,
    balanced: bool = False,
) -> tuple[ProtocolTree, Formulation, dict]:
    """Tree, compiled formulation, and a census of the construction.

    Every tree node's set is nonempty: each leaf contains the indicator
    vector of its own minimal stable set (asserted below by evaluation), and
    internal sets inherit nonemptiness along any surviving input pair. The
    compile therefore skips its per-part LP probes.
    """
    tree, leaves, pairs = _assemble(graph, order)
    rects = [leaves[path] for path in sorted(leaves)]
    for rect in rects:
        node = tree
        for tag in rect.path:
            node = node.child(tag)
        if not _leaf_witness_ok(graph, rect, node.leaf_ef):
            raise ProtocolError("leaf witness point violates its formulation")

    form = compile_tree(tree, balanced=balanced, check_nonempty=False)

    depth = max((len(r.path) for r in rects), default=0)
    nodes = sum(1 for _ in tree.iter_nodes())
    n = graph.n
    cap = None if n == 0 else n ** ((n - 1).bit_length() + 2 if n > 1 else 2)
    census = {
        "n": n,
        "bound": enumeration_bound(n),
        "pairs_enumerated": pairs,
        "leaves": len(rects),
        "value0_leaves": sum(1 for r in rects if r.value == 0),
        "value1_leaves": sum(1 for r in rects if r.value == 1),
        "max_combined_size": max((r.combined_size for r in rects), default=0),
        "tree_nodes": nodes,
        "tree_depth_edges": depth,
        "leaf_cap": cap,
        "within_leaf_cap": None if cap is None else len(rects) <= cap,
        "compiled": size_metrics(form).as_dict(),
        "leaf_metrics": [
            size_metrics(node.leaf_ef).as_dict() for _, node in tree.iter_leaves()
        ],
    }
    return tree, form, census
