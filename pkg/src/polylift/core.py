"""Exact rational linear algebra substrate: variables, constraints, systems.

Every number that enters the math path is a `fractions.Fraction`. Floats are
rejected at the boundary instead of silently coerced, so no binary rounding
can leak into any certificate this package produces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "Rat",
    "RatLike",
    "rat",
    "rat_str",
    "MissingVariableError",
    "VarName",
    "LE_REL",
    "EQ_REL",
    "LinearConstraint",
    "LinearSystem",
    "Point",
    "as_point",
    "evaluate_slack",
    "is_satisfied",
    "render_terms",
]

Rat = Fraction
RatLike = Union[int, str, Fraction]

# Name components may not contain "." (it is the path separator) nor any
# character our LP text dialect treats as an operator.
_COMPONENT_RE = re.compile(r"^[A-Za-z0-9_]+$")


def rat(value: RatLike) -> Fraction:
    """Coerce an int, a 'p/q' string, or a Fraction to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational scalar")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError("refusing float %r: pass an int, Fraction, or 'p/q' string" % value)
    raise TypeError("cannot interpret %r as a rational" % (value,))


def rat_str(value: RatLike) -> str:
    """Canonical text form: 'p/q' in lowest terms, or plain 'p' for integers."""
    return str(rat(value))


class MissingVariableError(KeyError):
    """A point or system was queried for a variable it does not carry."""


@total_ordering
@dataclass(frozen=True)
class VarName:
    """Hierarchical variable identifier: a path of tags plus a base name.

    Rendered with dots, e.g. VarName(("b0", "y"), "a") prints as "b0.y.a".
    Construction-path prefixes keep auxiliary variables from distinct
    subtrees disjoint without any global counter.
    """

    path: tuple[str, ...]
    base: str

    def __post_init__(self) -> None:
        for comp in (*self.path, self.base):
            if not _COMPONENT_RE.match(comp):
                raise ValueError("bad name component %r (allowed: [A-Za-z0-9_]+)" % comp)

    @property
    def components(self) -> tuple[str, ...]:
        return (*self.path, self.base)

    @property
    def text(self) -> str:
        return ".".join(self.components)

    @classmethod
    def parse(cls, text: str) -> "VarName":
        parts = text.split(".")
        return cls(tuple(parts[:-1]), parts[-1])

    def prefixed(self, *tags: str) -> "VarName":
        """New name with `tags` prepended to the path."""
        return VarName((*tags, *self.path), self.base)

    def __str__(self) -> str:
        return self.text

    def __lt__(self, other: "VarName") -> bool:
        if not isinstance(other, VarName):
            return NotImplemented
        return self.components < other.components


LE_REL = "<="
EQ_REL = "="

Point = Mapping[VarName, Fraction]


def as_point(mapping: Mapping[Union[VarName, str], RatLike]) -> dict[VarName, Fraction]:
    """Normalize a loose {name: scalar} mapping into {VarName: Fraction}."""
    out: dict[VarName, Fraction] = {}
    for key, val in mapping.items():
        name = key if isinstance(key, VarName) else VarName.parse(key)
        out[name] = rat(val)
    return out


def _normalize_terms(coeffs: Mapping[VarName, RatLike]) -> tuple[tuple[VarName, Fraction], ...]:
    items = []
    for name, val in coeffs.items():
        q = rat(val)
        if q != 0:
            items.append((name, q))
    items.sort(key=lambda it: it[0].components)
    return tuple(items)


@dataclass(frozen=True)
class LinearConstraint:
    """One row `sum coeff * var (<=|=) rhs` with exact coefficients.

    Terms are stored sorted by variable name with zero coefficients dropped,
    so structurally equal rows compare equal.
    """

    terms: tuple[tuple[VarName, Fraction], ...]
    relation: str
    rhs: Fraction

    def __post_init__(self) -> None:
        if self.relation not in (LE_REL, EQ_REL):
            raise ValueError("relation must be %r or %r" % (LE_REL, EQ_REL))

    @classmethod
    def of(cls, coeffs: Mapping[VarName, RatLike], relation: str, rhs: RatLike) -> "LinearConstraint":
        return cls(_normalize_terms(coeffs), relation, rat(rhs))

    @classmethod
    def le(cls, coeffs: Mapping[VarName, RatLike], rhs: RatLike) -> "LinearConstraint":
        return cls.of(coeffs, LE_REL, rhs)

    @classmethod
    def eq(cls, coeffs: Mapping[VarName, RatLike], rhs: RatLike) -> "LinearConstraint":
        return cls.of(coeffs, EQ_REL, rhs)

    @property
    def coeffs(self) -> dict[VarName, Fraction]:
        return dict(self.terms)

    def coeff(self, name: VarName) -> Fraction:
        for var, val in self.terms:
            if var == name:
                return val
        return Fraction(0)

    def variables(self) -> Iterator[VarName]:
        for var, _ in self.terms:
            yield var

    def evaluate(self, point: Point) -> Fraction:
        total = Fraction(0)
        for var, val in self.terms:
            try:
                total += val * point[var]
            except KeyError:
                raise MissingVariableError(var.text) from None
        return total

    def map_vars(self, fn) -> "LinearConstraint":
        mapped = _normalize_terms({fn(var): val for var, val in self.terms})
        if len(mapped) != len(self.terms):
            raise ValueError("variable renaming collided on %s" % (self,))
        return LinearConstraint(mapped, self.relation, self.rhs)

    def scaled(self, factor: RatLike) -> "LinearConstraint":
        q = rat(factor)
        if self.relation == LE_REL and q <= 0:
            raise ValueError("scaling an inequality needs a positive factor")
        if q == 0:
            raise ValueError("scaling an equation needs a nonzero factor")
        return LinearConstraint(
            tuple((var, val * q) for var, val in self.terms), self.relation, self.rhs * q
        )

    def __str__(self) -> str:
        lhs = render_terms(self.terms) or "0"
        return "%s %s %s" % (lhs, self.relation, rat_str(self.rhs))


def render_terms(terms: Iterable[tuple[VarName, Fraction]]) -> str:
    """Human form of a linear expression: '2 x.a - 1/3 x.b + y'."""
    pieces: list[str] = []
    for var, val in terms:
        if not pieces:
            sign = "-" if val < 0 else ""
        else:
            sign = " - " if val < 0 else " + "
        mag = abs(val)
        body = var.text if mag == 1 else "%s %s" % (rat_str(mag), var.text)
        pieces.append(sign + body)
    return "".join(pieces)


def evaluate_slack(constraint: LinearConstraint, point: Point) -> Fraction:
    """rhs minus lhs at `point`; nonnegative iff a <= row is satisfied."""
    return constraint.rhs - constraint.evaluate(point)


@dataclass(frozen=True)
class LinearSystem:
    """An ordered variable universe plus <= rows and = rows over it."""

    variables: tuple[VarName, ...]
    inequalities: tuple[LinearConstraint, ...]
    equations: tuple[LinearConstraint, ...]

    def __post_init__(self) -> None:
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable in system universe")
        universe = set(self.variables)
        for row in self.inequalities:
            if row.relation != LE_REL:
                raise ValueError("inequality list contains a non-<= row: %s" % row)
        for row in self.equations:
            if row.relation != EQ_REL:
                raise ValueError("equation list contains a non-= row: %s" % row)
        for row in self.constraints():
            for var in row.variables():
                if var not in universe:
                    raise MissingVariableError(var.text)

    @classmethod
    def of(
        cls,
        variables: Iterable[VarName] | None,
        inequalities: Iterable[LinearConstraint] = (),
        equations: Iterable[LinearConstraint] = (),
    ) -> "LinearSystem":
        ineqs = tuple(inequalities)
        eqs = tuple(equations)
        if variables is None:
            seen: dict[VarName, None] = {}
            for row in (*ineqs, *eqs):
                for var in row.variables():
                    seen.setdefault(var, None)
            variables = sorted(seen)
        return cls(tuple(variables), ineqs, eqs)

    def constraints(self) -> Iterator[LinearConstraint]:
        yield from self.inequalities
        yield from self.equations


def is_satisfied(system: LinearSystem, point: Point) -> bool:
    """Exact membership test; raises MissingVariableError on partial points."""
    for row in system.inequalities:
        if evaluate_slack(row, point) < 0:
            return False
    for row in system.equations:
        if evaluate_slack(row, point) != 0:
            return False
    return True
