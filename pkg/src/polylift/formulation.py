"""Extended formulations and the operations that combine them.

A Formulation is a linear system over `original` plus `aux` variables; the
polytope it describes is the projection onto the original variables. The
three structural operations are:

* `juxtapose`: intersect projections by stacking systems (aux renamed apart),
* `balas_union`: the convex hull of a union, via one scaled copy of each part
  and a mixing variable,
* `polar_eta`: from an extension of a polytope to an extension of a polar
  slice of it, used as the complement step in graph decompositions.

All operations are exact and total on their documented domains; empty parts
are rejected (cheap point probe first, then a phase-one LP).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    EQ_REL,
    LE_REL,
    LinearConstraint,
    LinearSystem,
    VarName,
    rat,
    rat_str,
    render_terms,
    is_satisfied,
)
from .lp import INFEASIBLE, LpProgram

__all__ = [
    "Formulation",
    "SizeMetrics",
    "EmptyPartError",
    "SpaceMismatchError",
    "box_rows",
    "prefix_aux",
    "juxtapose",
    "balas_union",
    "polar_eta",
    "embed",
    "size_metrics",
    "formulation_to_json",
    "formulation_from_json",
    "formulation_to_lp",
    "formulation_from_lp",
]


class EmptyPartError(ValueError):
    """An operation received a formulation with an empty feasible set."""


class SpaceMismatchError(ValueError):
    """Operands do not live over the same original variables."""


@dataclass(frozen=True)
class Formulation:
    """Linear system whose projection onto `original_vars` is the object."""

    original_vars: tuple[VarName, ...]
    aux_vars: tuple[VarName, ...]
    system: LinearSystem

    def __post_init__(self) -> None:
        if set(self.original_vars) & set(self.aux_vars):
            raise ValueError("original and aux variables overlap")
        expected = (*self.original_vars, *self.aux_vars)
        if self.system.variables != expected:
            raise ValueError("system universe must be original_vars + aux_vars in order")

    @classmethod
    def of(
        cls,
        original_vars: Iterable[VarName],
        aux_vars: Iterable[VarName],
        inequalities: Iterable[LinearConstraint] = (),
        equations: Iterable[LinearConstraint] = (),
    ) -> "Formulation":
        orig = tuple(original_vars)
        aux = tuple(aux_vars)
        system = LinearSystem.of((*orig, *aux), inequalities, equations)
        return cls(orig, aux, system)

    @property
    def inequalities(self) -> tuple[LinearConstraint, ...]:
        return self.system.inequalities

    @property
    def equations(self) -> tuple[LinearConstraint, ...]:
        return self.system.equations


@dataclass(frozen=True)
class SizeMetrics:
    num_inequalities: int
    num_equations: int
    num_variables: int
    total_encoding: int

    def as_dict(self) -> dict:
        return {
            "num_inequalities": self.num_inequalities,
            "num_equations": self.num_equations,
            "num_variables": self.num_variables,
            "total_encoding": self.total_encoding,
        }


def size_metrics(form: Formulation) -> SizeMetrics:
    """Counts plus sigma_plus: nonzero entries + number of rows."""
    nnz = sum(len(row.terms) for row in form.system.constraints())
    n_ineq = len(form.inequalities)
    n_eq = len(form.equations)
    return SizeMetrics(
        num_inequalities=n_ineq,
        num_equations=n_eq,
        num_variables=len(form.original_vars) + len(form.aux_vars),
        total_encoding=nnz + n_ineq + n_eq,
    )


def box_rows(
    variables: Iterable[VarName], lower=0, upper=1
) -> list[LinearConstraint]:
    """lower <= v <= upper as <= rows; pass None to skip a side."""
    rows: list[LinearConstraint] = []
    for var in variables:
        if lower is not None:
            rows.append(LinearConstraint.le({var: -1}, -rat(lower)))
        if upper is not None:
            rows.append(LinearConstraint.le({var: 1}, rat(upper)))
    return rows


def _ensure_nonempty(form: Formulation, role: str) -> None:
    zero = {v: Fraction(0) for v in form.system.variables}
    if is_satisfied(form.system, zero):
        return
    if LpProgram(form.system).feasibility().status == INFEASIBLE:
        raise EmptyPartError("%s has no feasible point" % role)


def _mapped_rows(
    form: Formulation, fn: Callable[[VarName], VarName]
) -> tuple[list[LinearConstraint], list[LinearConstraint]]:
    ineqs = [row.map_vars(fn) for row in form.inequalities]
    eqs = [row.map_vars(fn) for row in form.equations]
    return ineqs, eqs


def prefix_aux(form: Formulation, tag: str) -> Formulation:
    """Same formulation with every aux variable pushed under `tag`."""
    aux = set(form.aux_vars)

    def fn(var: VarName) -> VarName:
        return var.prefixed(tag) if var in aux else var

    ineqs, eqs = _mapped_rows(form, fn)
    return Formulation.of(
        form.original_vars, tuple(v.prefixed(tag) for v in form.aux_vars), ineqs, eqs
    )


def _same_space(parts: Sequence[Formulation]) -> tuple[VarName, ...]:
    base = parts[0].original_vars
    base_set = set(base)
    for part in parts[1:]:
        if set(part.original_vars) != base_set:
            raise SpaceMismatchError(
                "operands describe different original spaces: %s vs %s"
                % (sorted(map(str, base_set)), sorted(map(str, part.original_vars)))
            )
    return base


def juxtapose(parts: Sequence[Formulation], tags: Sequence[str] | None = None) -> Formulation:
    """Stack systems over a shared original space; projection = intersection."""
    if not parts:
        raise ValueError("juxtapose needs at least one part")
    original = _same_space(parts)
    if tags is None:
        tags = tuple("j%d" % i for i in range(len(parts)))
    if len(tags) != len(parts) or len(set(tags)) != len(tags):
        raise ValueError("need one distinct tag per part")
    aux: list[VarName] = []
    ineqs: list[LinearConstraint] = []
    eqs: list[LinearConstraint] = []
    for part, tag in zip(parts, tags):
        renamed = prefix_aux(part, tag)
        aux.extend(renamed.aux_vars)
        ineqs.extend(renamed.inequalities)
        eqs.extend(renamed.equations)
    return Formulation.of(original, aux, ineqs, eqs)


def _scaled_copy(
    form: Formulation,
    tag: str,
    lam: VarName,
    lam_coeff_sign: int,
) -> tuple[list[VarName], list[LinearConstraint], list[LinearConstraint]]:
    """Copy of `form` with all variables under `tag` and rhs traded for lam.

    sign +1 encodes `A y <= lam * b`, sign -1 encodes `A y <= (1 - lam) * b`.
    """

    def fn(var: VarName) -> VarName:
        return var.prefixed(tag)

    copies = [fn(v) for v in form.system.variables]
    ineqs: list[LinearConstraint] = []
    eqs: list[LinearConstraint] = []
    for row in form.system.constraints():
        coeffs = {fn(var): val for var, val in row.terms}
        if lam_coeff_sign > 0:
            coeffs[lam] = coeffs.get(lam, Fraction(0)) - row.rhs
            moved = LinearConstraint.of(coeffs, row.relation, 0)
        else:
            coeffs[lam] = coeffs.get(lam, Fraction(0)) + row.rhs
            moved = LinearConstraint.of(coeffs, row.relation, row.rhs)
        (ineqs if row.relation == LE_REL else eqs).append(moved)
    return copies, ineqs, eqs


def _fresh_lam(taken: set[VarName]) -> VarName:
    cand = VarName((), "lam")
    k = 0
    while cand in taken:
        k += 1
        cand = VarName((), "lam_%d" % k)
    return cand


def balas_union(
    first: Formulation,
    second: Formulation,
    tags: tuple[str, str] = ("b0", "b1"),
    lam: VarName | None = None,
    check_nonempty: bool = True,
) -> Formulation:
    """Extension of conv(P1 union P2) from extensions of the parts.

    Each part contributes a full renamed copy of its variables; part one is
    scaled by lam, part two by (1 - lam); the original variables are the
    coordinatewise sums of the two copies. Both bounds 0 <= lam <= 1 are
    always emitted. Inequality count is m1 + m2 + 2, equation count is
    e1 + e2 + d with d = dimension of the shared original space.
    """
    if tags[0] == tags[1]:
        raise ValueError("the two copy tags must differ")
    original = _same_space((first, second))
    if check_nonempty:
        _ensure_nonempty(first, "first part of a union")
        _ensure_nonempty(second, "second part of a union")

    copies0 = [v.prefixed(tags[0]) for v in first.system.variables]
    copies1 = [v.prefixed(tags[1]) for v in second.system.variables]
    if lam is None:
        lam = _fresh_lam(set(original) | set(copies0) | set(copies1))

    _, ineqs0, eqs0 = _scaled_copy(first, tags[0], lam, +1)
    _, ineqs1, eqs1 = _scaled_copy(second, tags[1], lam, -1)

    coupling = [
        LinearConstraint.eq(
            {
                var: 1,
                var.prefixed(tags[0]): -1,
                var.prefixed(tags[1]): -1,
            },
            0,
        )
        for var in original
    ]
    lam_rows = [
        LinearConstraint.le({lam: 1}, 1),
        LinearConstraint.le({lam: -1}, 0),
    ]
    return Formulation.of(
        original,
        (*copies0, *copies1, lam),
        (*ineqs0, *ineqs1, *lam_rows),
        (*eqs0, *eqs1, *coupling),
    )


def union_fold(
    parts: Sequence[Formulation],
    balanced: bool = False,
    check_nonempty: bool = True,
) -> Formulation:
    """Fold a list of parts into nested two-way unions.

    Default association is left-leaning: ((p0 u p1) u p2) u ... The balanced
    flag switches to a binary split, which keeps copy paths logarithmic.
    """
    if not parts:
        raise ValueError("union of zero parts")
    if len(parts) == 1:
        return parts[0]
    if balanced:
        mid = len(parts) // 2
        left = union_fold(parts[:mid], balanced=True, check_nonempty=check_nonempty)
        right = union_fold(parts[mid:], balanced=True, check_nonempty=check_nonempty)
        return balas_union(left, right, check_nonempty=check_nonempty)
    acc = parts[0]
    for part in parts[1:]:
        acc = balas_union(acc, part, check_nonempty=check_nonempty)
    return acc


def _fresh_dual_path(form: Formulation) -> tuple[str, ...]:
    taken = set(form.original_vars)
    path = ("eta",)
    k = 0
    while any(v.path[: len(path)] == path for v in taken):
        k += 1
        path = ("eta_%d" % k,)
    return path


def polar_eta(
    form: Formulation, gamma, check_nonempty: bool = True
) -> Formulation:
    """Extension of {x >= 0 : x.y <= gamma for all y in the input's polytope}.

    One multiplier per input row (nonnegative for inequalities, free for
    equations) certifies the bound gamma on the inner product. The output
    lives over the same original variables and includes x >= 0.
    """
    if check_nonempty:
        _ensure_nonempty(form, "polar input")
    gamma = rat(gamma)
    dual_path = _fresh_dual_path(form)
    lam = [VarName(dual_path, "l%d" % i) for i in range(len(form.inequalities))]
    mu = [VarName(dual_path, "m%d" % k) for k in range(len(form.equations))]

    by_var: dict[VarName, dict[VarName, Fraction]] = {
        v: {} for v in form.system.variables
    }
    budget: dict[VarName, Fraction] = {}
    for dual, row in zip(
        (*lam, *mu), (*form.inequalities, *form.equations)
    ):
        for var, val in row.terms:
            by_var[var][dual] = val
        if row.rhs != 0:
            budget[dual] = row.rhs

    originals = set(form.original_vars)
    eqs: list[LinearConstraint] = []
    for var in form.system.variables:
        coeffs: dict[VarName, Fraction] = dict(by_var[var])
        if var in originals:
            coeffs[var] = Fraction(-1)
        eqs.append(LinearConstraint.eq(coeffs, 0))
    ineqs = [LinearConstraint.le(budget, gamma)]
    ineqs.extend(LinearConstraint.le({v: -1}, 0) for v in lam)
    ineqs.extend(LinearConstraint.le({v: -1}, 0) for v in form.original_vars)
    return Formulation.of(form.original_vars, (*lam, *mu), ineqs, eqs)


def embed(form: Formulation, ambient: Sequence[VarName]) -> Formulation:
    """Reinterpret over a larger original space; new coordinates are free."""
    ambient = tuple(ambient)
    if not set(form.original_vars) <= set(ambient):
        raise SpaceMismatchError("ambient space must contain the original variables")
    if set(ambient) & set(form.aux_vars):
        raise ValueError("ambient space collides with aux variables")
    return Formulation.of(ambient, form.aux_vars, form.inequalities, form.equations)


# ----------------------------------------------------------------------
# serialization

def _rows_to_json(rows: Iterable[LinearConstraint]) -> list[dict]:
    return [
        {
            "coeffs": {var.text: rat_str(val) for var, val in row.terms},
            "rhs": rat_str(row.rhs),
        }
        for row in rows
    ]


def formulation_to_json(form: Formulation) -> dict:
    return {
        "original_vars": [v.text for v in form.original_vars],
        "aux_vars": [v.text for v in form.aux_vars],
        "inequalities": _rows_to_json(form.inequalities),
        "equations": _rows_to_json(form.equations),
    }


def _rows_from_json(items: Iterable[Mapping], relation: str) -> list[LinearConstraint]:
    rows = []
    for item in items:
        coeffs = {VarName.parse(name): rat(val) for name, val in item["coeffs"].items()}
        rows.append(LinearConstraint.of(coeffs, relation, rat(item["rhs"])))
    return rows


def formulation_from_json(obj: Mapping) -> Formulation:
    return Formulation.of(
        [VarName.parse(t) for t in obj["original_vars"]],
        [VarName.parse(t) for t in obj["aux_vars"]],
        _rows_from_json(obj.get("inequalities", ()), LE_REL),
        _rows_from_json(obj.get("equations", ()), EQ_REL),
    )


def formulation_to_lp(form: Formulation, objective: Mapping[VarName, Fraction] | None = None) -> str:
    """CPLEX-like text. Header comments carry the original/aux split so the
    file round-trips through `formulation_from_lp`."""
    lines = ["\\ polylift-lp 1"]
    lines.append("\\ original: " + " ".join(v.text for v in form.original_vars))
    lines.append("\\ aux: " + " ".join(v.text for v in form.aux_vars))
    lines.append("Maximize")
    obj_terms = ""
    if objective:
        obj_terms = " " + render_terms(sorted(objective.items(), key=lambda t: t[0].components))
    lines.append(" obj:%s" % obj_terms)
    lines.append("Subject To")
    for i, row in enumerate(form.inequalities):
        lines.append(" r%d: %s" % (i, row))
    for i, row in enumerate(form.equations):
        lines.append(" e%d: %s" % (i, row))
    lines.append("Bounds")
    for var in form.system.variables:
        lines.append(" %s free" % var.text)
    lines.append("End")
    return "\n".join(lines) + "\n"


_NUM_RE = re.compile(r"^\d+(/\d+)?$")


def _parse_lp_row(body: str, label: str) -> LinearConstraint:
    tokens = body.replace("+", " + ").replace("<=", " <= ").split()
    # note: "-" is both a sign and part of nothing else we emit, safe to pad
    out: list[str] = []
    for tok in tokens:
        if tok.startswith("-") and len(tok) > 1:
            out.extend(["-", tok[1:]])
        else:
            out.append(tok)
    tokens = out

    coeffs: dict[VarName, Fraction] = {}
    relation = None
    rhs = None
    sign = Fraction(1)
    pending: Fraction | None = None
    for tok in tokens:
        if tok == "+":
            continue
        if tok == "-":
            sign = -sign
            continue
        if tok in (LE_REL, EQ_REL):
            relation = tok
            continue
        if tok == ">=":
            raise ValueError("row %s: >= rows are not part of this dialect" % label)
        if _NUM_RE.match(tok):
            value = sign * Fraction(tok)
            if relation is not None:
                rhs = value
            else:
                pending = value
                continue
        else:
            var = VarName.parse(tok)
            mag = pending if pending is not None else sign
            coeffs[var] = coeffs.get(var, Fraction(0)) + (mag if pending is not None else sign)
        sign = Fraction(1)
        pending = None
    if relation is None or rhs is None:
        raise ValueError("row %s: missing relation or right-hand side" % label)
    return LinearConstraint.of(coeffs, relation, rhs)


def formulation_from_lp(text: str) -> Formulation:
    original: list[VarName] | None = None
    aux: list[VarName] | None = None
    ineqs: list[LinearConstraint] = []
    eqs: list[LinearConstraint] = []
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            comment = line[1:].strip()
            if comment.startswith("original:"):
                original = [VarName.parse(t) for t in comment[len("original:"):].split()]
            elif comment.startswith("aux:"):
                aux = [VarName.parse(t) for t in comment[len("aux:"):].split()]
            continue
        low = line.lower()
        if low in ("maximize", "minimize"):
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low == "end":
            break
        if section == "obj":
            continue  # objectives are not part of a Formulation
        if section == "rows":
            if ":" not in line:
                raise ValueError("constraint line without label: %r" % line)
            label, body = line.split(":", 1)
            row = _parse_lp_row(body.strip(), label.strip())
            (ineqs if row.relation == LE_REL else eqs).append(row)
            continue
        if section == "bounds":
            fields = line.split()
            if len(fields) != 2 or fields[1].lower() != "free":
                raise ValueError("unsupported bounds line: %r" % line)
            continue
        raise ValueError("unexpected line outside any section: %r" % line)
    if original is None or aux is None:
        raise ValueError("missing '\\ original:'/'\\ aux:' headers; not a polylift LP file")
    return Formulation.of(original, aux, ineqs, eqs)
