"""Protocol trees and their compilation into extended formulations.

A tree node is labelled by the party that speaks: a node of the row player
("A") splits the row set, so its children are combined by juxtaposition; a
node of the column player ("B") splits the column set, so its children are
combined by a disjunctive union fold. Leaves carry an explicit formulation,
or a rectangle description from which one is synthesized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .core import (
    EQ_REL,
    LE_REL,
    LinearConstraint,
    LinearSystem,
    RatLike,
    VarName,
    rat,
    rat_str,
)
from .formulation import (
    Formulation,
    box_rows,
    formulation_from_json,
    formulation_to_json,
    juxtapose,
    prefix_aux,
    union_fold,
)

__all__ = [
    "ALICE",
    "BOB",
    "LEAF",
    "CompileError",
    "NegativeValueError",
    "RectangleLeafSpec",
    "ProtocolTree",
    "leaf_formulation",
    "compile_tree",
    "factorization_formulation",
    "protocol_to_json",
    "protocol_from_json",
]

ALICE = "A"
BOB = "B"
LEAF = "leaf"


class CompileError(ValueError):
    pass


class NegativeValueError(ValueError):
    """A leaf claims a negative common slack, which no choice of
    nonnegative leaf polytope can certify."""


@dataclass(frozen=True)
class RectangleLeafSpec:
    """What a leaf knows: the outer rows alive in its rectangle, the common
    slack value of those rows on its columns (if known), and box bounds."""

    variables: tuple[VarName, ...]
    rows: tuple[LinearConstraint, ...]
    value: Fraction | None
    lower: tuple[Fraction | None, ...]
    upper: tuple[Fraction | None, ...]

    @classmethod
    def of(
        cls,
        variables: Sequence[VarName],
        rows: Sequence[LinearConstraint] = (),
        value: RatLike | None = None,
        lower: RatLike | None = 0,
        upper: RatLike | None = 1,
    ) -> "RectangleLeafSpec":
        variables = tuple(variables)
        lo = None if lower is None else rat(lower)
        up = None if upper is None else rat(upper)
        return cls(
            variables,
            tuple(rows),
            None if value is None else rat(value),
            tuple(lo for _ in variables),
            tuple(up for _ in variables),
        )


def leaf_formulation(spec: RectangleLeafSpec) -> Formulation:
    """The generic leaf polytope: each live row is tight up to the known
    slack (or up to one shared nonnegative slack variable when the value is
    unknown), intersected with the box."""
    allowed = set(spec.variables)
    for row in spec.rows:
        if row.relation != LE_REL:
            raise ValueError("leaf rows must be <= rows")
        for var in row.variables():
            if var not in allowed:
                raise ValueError("leaf row uses foreign variable %s" % var)

    ineqs: list[LinearConstraint] = []
    eqs: list[LinearConstraint] = []
    aux: tuple[VarName, ...] = ()

    if spec.value is not None:
        if spec.value < 0:
            raise NegativeValueError("leaf value %s is negative" % rat_str(spec.value))
        if not spec.rows:
            warnings.warn(
                "leaf has a known value but no rows; formulation is box-only",
                stacklevel=2,
            )
        for row in spec.rows:
            eqs.append(LinearConstraint.eq(row.coeffs, row.rhs - spec.value))
    elif spec.rows:
        slack = VarName((), "yR")
        aux = (slack,)
        ineqs.append(LinearConstraint.le({slack: -1}, 0))
        for row in spec.rows:
            coeffs = row.coeffs
            coeffs[slack] = Fraction(1)
            eqs.append(LinearConstraint.eq(coeffs, row.rhs))

    for var, lo, up in zip(spec.variables, spec.lower, spec.upper):
        ineqs.extend(box_rows([var], lo, up))

    return Formulation.of(spec.variables, aux, ineqs, eqs)


@dataclass(frozen=True)
class ProtocolTree:
    """Immutable protocol tree node. `children` preserves insertion order;
    tags are the message labels on the edges."""

    sender: str
    children: tuple[tuple[str, "ProtocolTree"], ...] = ()
    value: Fraction | None = None
    leaf_spec: RectangleLeafSpec | None = None
    leaf_ef: Formulation | None = None
    override_ef: Formulation | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.sender not in (ALICE, BOB, LEAF):
            raise ValueError("sender must be 'A', 'B', or 'leaf'")
        if self.sender == LEAF and self.children:
            raise ValueError("a leaf cannot have children")
        tags = [tag for tag, _ in self.children]
        if len(set(tags)) != len(tags):
            raise ValueError("duplicate child tag")

    @property
    def is_leaf(self) -> bool:
        return self.sender == LEAF

    def child(self, tag: str) -> "ProtocolTree":
        for t, node in self.children:
            if t == tag:
                return node
        raise KeyError(tag)

    def iter_nodes(self, path: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], "ProtocolTree"]]:
        yield path, self
        for tag, node in self.children:
            yield from node.iter_nodes((*path, tag))

    def iter_leaves(self) -> Iterator[tuple[tuple[str, ...], "ProtocolTree"]]:
        for path, node in self.iter_nodes():
            if node.is_leaf:
                yield path, node


def _leaf_ef(node: ProtocolTree) -> Formulation:
    if node.leaf_ef is not None:
        return node.leaf_ef
    if node.leaf_spec is not None:
        return leaf_formulation(node.leaf_spec)
    raise CompileError("leaf without a formulation (no leaf_ef and no leaf_spec)")


def compile_tree(
    tree: ProtocolTree,
    balanced: bool = False,
    check_nonempty: bool = True,
) -> Formulation:
    """Bottom-up compilation: leaves contribute their formulations, row-player
    nodes juxtapose, column-player nodes fold unions. An `override_ef` on an
    internal node wins over everything below it. Single children pass through
    (with their aux renamed under the edge tag)."""
    if tree.is_leaf:
        return _leaf_ef(tree)
    if tree.override_ef is not None:
        return tree.override_ef
    if not tree.children:
        raise CompileError("internal node with no children")
    parts = [
        compile_tree(node, balanced=balanced, check_nonempty=check_nonempty)
        for _, node in tree.children
    ]
    tags = [tag for tag, _ in tree.children]
    if len(parts) == 1:
        return prefix_aux(parts[0], tags[0])
    if tree.sender == ALICE:
        return juxtapose(parts, tags=tags)
    tagged = [prefix_aux(part, tag) for part, tag in zip(parts, tags)]
    return union_fold(tagged, balanced=balanced, check_nonempty=check_nonempty)


def factorization_formulation(
    rectangles: Sequence[tuple[VarName, frozenset, RatLike]],
    q_system: LinearSystem,
) -> Formulation:
    """The formulation read off a nonnegative factorization of the slack
    matrix: for every outer row i, the row plus the sum of the rectangle
    variables covering i is tight, and rectangle variables are nonnegative.

    `rectangles` entries are (variable name, set of row indices, value); the
    value must be positive and enters only through the covering structure.
    """
    if q_system.equations:
        raise ValueError("outer system must consist of inequalities only")
    m = len(q_system.inequalities)
    names: list[VarName] = []
    covering: list[list[VarName]] = [[] for _ in range(m)]
    taken = set(q_system.variables)
    for name, row_ids, value in rectangles:
        if rat(value) <= 0:
            raise ValueError("rectangle %s has nonpositive value" % name)
        if name in taken:
            raise ValueError("duplicate variable %s" % name)
        taken.add(name)
        names.append(name)
        for i in row_ids:
            if not 0 <= i < m:
                raise ValueError("rectangle %s references unknown row %d" % (name, i))
            covering[i].append(name)

    eqs = []
    for i, row in enumerate(q_system.inequalities):
        coeffs = row.coeffs
        for name in covering[i]:
            coeffs[name] = Fraction(1)
        eqs.append(LinearConstraint.eq(coeffs, row.rhs))
    ineqs = [LinearConstraint.le({name: -1}, 0) for name in names]
    return Formulation.of(q_system.variables, names, ineqs, eqs)


# ----------------------------------------------------------------------
# serialization

def protocol_to_json(tree: ProtocolTree) -> dict:
    out: dict = {"sender": tree.sender}
    if tree.label:
        out["label"] = tree.label
    if tree.children:
        out["children"] = {tag: protocol_to_json(node) for tag, node in tree.children}
    if tree.value is not None:
        out["value"] = rat_str(tree.value)
    if tree.is_leaf:
        try:
            out["leaf_ef"] = formulation_to_json(_leaf_ef(tree))
        except CompileError:
            pass
    if tree.override_ef is not None:
        out["override_ef"] = formulation_to_json(tree.override_ef)
    return out


def protocol_from_json(obj: Mapping) -> ProtocolTree:
    children = tuple(
        (tag, protocol_from_json(sub)) for tag, sub in obj.get("children", {}).items()
    )
    leaf_ef = obj.get("leaf_ef")
    override = obj.get("override_ef")
    return ProtocolTree(
        sender=obj["sender"],
        children=children,
        value=None if "value" not in obj else rat(obj["value"]),
        leaf_ef=None if leaf_ef is None else formulation_from_json(leaf_ef),
        override_ef=None if override is None else formulation_from_json(override),
        label=obj.get("label", ""),
    )
