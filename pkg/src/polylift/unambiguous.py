"""Compile an extended formulation from a rectangle partition of a slack
matrix.

The partition plays the role of an unambiguous certificate scheme: every
matrix entry lies in exactly one rectangle, and each rectangle carries one
constant value. Two distinct rectangles can share rows or columns but never
both (they would share an entry). The tree mirrors a deterministic search
for the owning rectangle: the row player offers a rectangle that shares
rows with at most about half of the live candidates, the column player
mirrors on columns when the row player has nothing to offer, and each offer
shrinks the candidate set to the closed row-sharing (or column-sharing)
neighborhood of the offered rectangle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .core import rat, rat_str, RatLike
from .formulation import Formulation
from .graphs import Graph
from .protocol import (
    ALICE,
    BOB,
    LEAF,
    CompileError,
    ProtocolTree,
    RectangleLeafSpec,
    compile_tree,
    leaf_formulation,
)
from .verify import PolytopePair, SlackMatrix

__all__ = [
    "PartitionError",
    "PartitionOverlapError",
    "PartitionGapError",
    "NotMonochromaticError",
    "CrossIntersectionError",
    "NoGoodRectangleError",
    "Rectangle",
    "RectanglePartition",
    "IntersectionGraphs",
    "intersection_graphs",
    "build_unambiguous_tree",
    "compile_unambiguous",
    "replay_unambiguous",
]


class PartitionError(ValueError):
    pass


class PartitionOverlapError(PartitionError):
    pass


class PartitionGapError(PartitionError):
    pass


class NotMonochromaticError(PartitionError):
    pass


class CrossIntersectionError(PartitionError):
    """Two rectangles share both a row and a column."""


class NoGoodRectangleError(PartitionError):
    """Neither side can offer a rectangle; the input cannot be a partition."""


@dataclass(frozen=True)
class Rectangle:
    rows: frozenset
    cols: frozenset
    value: Fraction

    @classmethod
    def of(cls, rows, cols, value: RatLike) -> "Rectangle":
        rows = frozenset(rows)
        cols = frozenset(cols)
        if not rows or not cols:
            raise PartitionError("rectangle needs at least one row and one column")
        val = rat(value)
        if val < 0:
            raise PartitionError("rectangle value must be nonnegative")
        return cls(rows, cols, val)


@dataclass(frozen=True)
class RectanglePartition:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    rectangles: tuple[Rectangle, ...]

    @classmethod
    def of(cls, rows, cols, rectangles) -> "RectanglePartition":
        rows = tuple(rows)
        cols = tuple(cols)
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise PartitionError("duplicate row or column id")
        rects = tuple(rectangles)
        if not rects:
            raise PartitionError("partition needs at least one rectangle")
        return cls(rows, cols, rects)

    def owner_of(self, row: str, col: str) -> int:
        hits = [
            k
            for k, rect in enumerate(self.rectangles)
            if row in rect.rows and col in rect.cols
        ]
        if not hits:
            raise PartitionGapError("entry (%s, %s) is uncovered" % (row, col))
        if len(hits) > 1:
            raise PartitionOverlapError(
                "entry (%s, %s) lies in rectangles %s" % (row, col, hits)
            )
        return hits[0]

    def to_json(self) -> dict:
        return {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "rectangles": [
                {
                    "rows": sorted(r.rows),
                    "cols": sorted(r.cols),
                    "value": rat_str(r.value),
                }
                for r in self.rectangles
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RectanglePartition":
        rects = [
            Rectangle.of(item["rows"], item["cols"], item["value"])
            for item in data["rectangles"]
        ]
        return cls.of(data["rows"], data["cols"], rects)


@dataclass(frozen=True)
class IntersectionGraphs:
    """Row-sharing and column-sharing graphs on the rectangle set. Build
    through `.of` or `intersection_graphs`, which enforce that no pair
    shares both ways."""

    horizontal: Graph
    vertical: Graph

    @classmethod
    def of(cls, horizontal: Graph, vertical: Graph) -> "IntersectionGraphs":
        if horizontal.n != vertical.n:
            raise CrossIntersectionError("graphs disagree on the rectangle count")
        for a, b in horizontal.edges():
            if vertical.adjacent(a, b):
                raise CrossIntersectionError(
                    "rectangles %d and %d intersect both ways" % (a, b)
                )
        return cls(horizontal, vertical)


def intersection_graphs(
    partition: RectanglePartition, matrix: SlackMatrix | None = None
) -> IntersectionGraphs:
    """Validates the partition (distinct overlap / gap / value errors, the
    last only when a matrix is supplied) and reads off the two graphs."""
    owner: dict[tuple[str, str], int] = {}
    for k, rect in enumerate(partition.rectangles):
        bad_rows = rect.rows - set(partition.rows)
        bad_cols = rect.cols - set(partition.cols)
        if bad_rows or bad_cols:
            raise PartitionGapError(
                "rectangle %d uses unknown ids %s" % (k, sorted(bad_rows | bad_cols))
            )
        for r in rect.rows:
            for c in rect.cols:
                if (r, c) in owner:
                    raise PartitionOverlapError(
                        "entry (%s, %s) lies in rectangles %d and %d"
                        % (r, c, owner[(r, c)], k)
                    )
                owner[(r, c)] = k
    for r in partition.rows:
        for c in partition.cols:
            if (r, c) not in owner:
                raise PartitionGapError("entry (%s, %s) is uncovered" % (r, c))
    if matrix is not None:
        row_index = {label: i for i, label in enumerate(matrix.row_labels)}
        col_index = {label: j for j, label in enumerate(matrix.col_labels)}
        for k, rect in enumerate(partition.rectangles):
            for r in rect.rows:
                for c in rect.cols:
                    got = matrix.entry(row_index[r], col_index[c])
                    if got != rect.value:
                        raise NotMonochromaticError(
                            "rectangle %d has value %s but entry (%s, %s) is %s"
                            % (k, rat_str(rect.value), r, c, rat_str(got))
                        )

    t = len(partition.rectangles)
    h_edges = []
    v_edges = []
    for a in range(t):
        for b in range(a + 1, t):
            if partition.rectangles[a].rows & partition.rectangles[b].rows:
                h_edges.append((a, b))
            if partition.rectangles[a].cols & partition.rectangles[b].cols:
                v_edges.append((a, b))
    names = tuple("R%d" % k for k in range(t))
    return IntersectionGraphs.of(
        Graph.of(t, h_edges, names), Graph.of(t, v_edges, names)
    )


def _closed(graph: Graph, v: int, live: frozenset) -> frozenset:
    return (graph.neighbors(v) | {v}) & live


def _sendable(graph: Graph, live: frozenset) -> list[int]:
    # good = closed sharing-degree at most (|live|+1)/2; the two-sided count
    # |N_H[R] cap live| + |N_V[R] cap live| <= |live|+1 then guarantees every
    # rectangle is good on at least one side
    return [v for v in sorted(live) if 2 * len(_closed(graph, v, live)) <= len(live) + 1]


def _expand(
    graphs: IntersectionGraphs,
    rects: Sequence[Rectangle],
    live: frozenset,
    sender: str,
    stalled: bool,
    prune: bool,
) -> ProtocolTree:
    if len(live) == 1:
        (only,) = live
        return ProtocolTree(sender=LEAF, label="R%d" % only)
    graph = graphs.horizontal if sender == ALICE else graphs.vertical
    good = _sendable(graph, live)
    if not good and stalled:
        raise NoGoodRectangleError(
            "no rectangle is offerable on either side among %s" % sorted(live)
        )
    children: list[tuple[str, ProtocolTree]] = []
    for v in good:
        child_live = _closed(graph, v, live)
        children.append(
            ("r%d" % v, _expand(graphs, rects, child_live, ALICE, False, prune))
        )
    high = live - set(good)
    if high:
        skip = False
        if prune:
            covered = set()
            reachable = set()
            for v in live:
                ids = rects[v].rows if sender == ALICE else rects[v].cols
                reachable |= ids
                if v in set(good):
                    covered |= ids
            skip = reachable <= covered
        if not skip:
            other = BOB if sender == ALICE else ALICE
            children.append(
                ("none", _expand(graphs, rects, high, other, high == live, prune))
            )
    return ProtocolTree(
        sender=sender,
        children=tuple(children),
        label="live:" + ",".join(str(v) for v in sorted(live)),
    )


def build_unambiguous_tree(
    partition: RectanglePartition,
    graphs: IntersectionGraphs | None = None,
    prune: bool = False,
) -> ProtocolTree:
    """Tree over rectangle indices; leaves are labelled "R<k>" and carry no
    formulation yet. A supplied graph pair is cross-checked against the one
    recomputed from the partition."""
    computed = intersection_graphs(partition)
    if graphs is not None:
        if (
            graphs.horizontal != computed.horizontal
            or graphs.vertical != computed.vertical
        ):
            raise PartitionError("supplied sharing graphs disagree with the partition")
    live = frozenset(range(len(partition.rectangles)))
    return _expand(computed, partition.rectangles, live, ALICE, False, prune)


def _default_leaf_ef(pair: PolytopePair, rect: Rectangle) -> Formulation:
    by_label = dict(pair.rows)
    rows = [by_label[label] for label in sorted(rect.rows)]
    spec = RectangleLeafSpec.of(pair.variables, rows, value=rect.value)
    return leaf_formulation(spec)


def compile_unambiguous(
    partition: RectanglePartition,
    pair: PolytopePair | None = None,
    leaf_efs: Mapping[Rectangle, Formulation] | None = None,
    graphs: IntersectionGraphs | None = None,
    prune: bool = False,
    balanced: bool = False,
    check_nonempty: bool = True,
) -> Formulation:
    """Attach one formulation per surviving rectangle and compile. Explicit
    leaf formulations win; otherwise each rectangle gets its tight-rows
    construction from the pair (box plus every owned row forced to the
    rectangle's value).

    check_nonempty=False skips the per-union feasibility probes; safe when
    the partition was checked monochromatic against the pair beforehand,
    since then every rectangle contains its own column vertices."""
    tree = build_unambiguous_tree(partition, graphs, prune=prune)
    cache: dict[int, Formulation] = {}

    def leaf_ef(k: int) -> Formulation:
        if k not in cache:
            rect = partition.rectangles[k]
            if leaf_efs is not None and rect in leaf_efs:
                cache[k] = leaf_efs[rect]
            elif pair is not None:
                cache[k] = _default_leaf_ef(pair, rect)
            else:
                raise CompileError("no formulation for rectangle %d" % k)
        return cache[k]

    def rebuild(node: ProtocolTree) -> ProtocolTree:
        if node.is_leaf:
            k = int(node.label[1:])
            return ProtocolTree(
                sender=LEAF,
                value=partition.rectangles[k].value,
                leaf_ef=leaf_ef(k),
                label=node.label,
            )
        return ProtocolTree(
            sender=node.sender,
            children=tuple((tag, rebuild(child)) for tag, child in node.children),
            label=node.label,
        )

    return compile_tree(
        rebuild(tree), balanced=balanced, check_nonempty=check_nonempty
    )


def replay_unambiguous(
    partition: RectanglePartition, row: str, col: str
) -> tuple[tuple[str, ...], int]:
    """Walk the tree the way the two players would on input (row, col):
    offer the lowest-index good rectangle containing the input, say "none"
    otherwise. Returns the edge tags and the owning rectangle, asserting the
    owner is never dropped."""
    graphs = intersection_graphs(partition)
    owner = partition.owner_of(row, col)
    live = frozenset(range(len(partition.rectangles)))
    sender = ALICE
    tags: list[str] = []
    while len(live) > 1:
        graph = graphs.horizontal if sender == ALICE else graphs.vertical
        good = _sendable(graph, live)
        ids = lambda k: (
            partition.rectangles[k].rows if sender == ALICE else partition.rectangles[k].cols
        )
        mine = row if sender == ALICE else col
        candidates = [v for v in good if mine in ids(v)]
        if candidates:
            pick = candidates[0]
            tags.append("r%d" % pick)
            live = _closed(graph, pick, live)
            sender = ALICE
        else:
            tags.append("none")
            live = live - set(good)
            sender = BOB if sender == ALICE else ALICE
        if owner not in live:
            raise AssertionError(
                "owning rectangle %d was dropped on path %s" % (owner, tags)
            )
    return tuple(tags), owner
