"""Verification utilities.

Everything here is exact: LP answers are rational, projections are compared
either on finitely many optimization directions or by full variable
elimination, and every failure is reported with a concrete witness.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import (
    EQ_REL,
    LinearConstraint,
    LinearSystem,
    VarName,
    rat,
    rat_str,
)
from .formulation import Formulation, box_rows
from .graphs import Graph, vertex_var, vertex_vars
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProgram, LpResult

__all__ = [
    "Report",
    "lp_solve",
    "PolytopePair",
    "SlackMatrix",
    "NegativeSlackError",
    "VariableCapError",
    "stab_qstab_pair",
    "qstab_formulation",
    "stable_point",
    "check_sandwich",
    "projections_agree",
    "fourier_motzkin",
    "systems_equal_lp",
    "verify_partition",
]


@dataclass
class Report:
    """Outcome of one verification pass, JSON-friendly."""

    name: str
    passed: bool
    data: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seed: int | None = None
    elapsed_sec: float = 0.0

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "data": self.data,
            "failures": self.failures,
            "seed": self.seed,
            # wall-clock time; the only field that varies between runs
            "elapsed_sec": round(self.elapsed_sec, 6),
        }


def lp_solve(
    target: Formulation | LinearSystem,
    objective: Mapping[VarName, Fraction],
    sense: str = "max",
) -> LpResult:
    system = target.system if isinstance(target, Formulation) else target
    return LpProgram(system).solve(objective, sense)


# ----------------------------------------------------------------------
# polytope pairs and slack matrices

class NegativeSlackError(ValueError):
    """Some claimed inner point violates an outer row."""


@dataclass(frozen=True)
class PolytopePair:
    """Inner polytope as labelled vertices, outer as labelled rows + a box."""

    variables: tuple[VarName, ...]
    vertices: tuple[tuple[str, tuple[tuple[VarName, Fraction], ...]], ...]
    rows: tuple[tuple[str, LinearConstraint], ...]
    lower: tuple[Fraction | None, ...]
    upper: tuple[Fraction | None, ...]

    def vertex_point(self, index: int) -> dict[VarName, Fraction]:
        return dict(self.vertices[index][1])

    def to_json(self) -> dict:
        return {
            "variables": [v.text for v in self.variables],
            "vertices": [
                {"label": label, "point": {v.text: rat_str(x) for v, x in pt}}
                for label, pt in self.vertices
            ],
            "rows": [
                {
                    "label": label,
                    "coeffs": {v.text: rat_str(c) for v, c in row.terms},
                    "rhs": rat_str(row.rhs),
                }
                for label, row in self.rows
            ],
            "lower": {
                v.text: rat_str(b)
                for v, b in zip(self.variables, self.lower)
                if b is not None
            },
            "upper": {
                v.text: rat_str(b)
                for v, b in zip(self.variables, self.upper)
                if b is not None
            },
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PolytopePair":
        variables = tuple(VarName.parse(t) for t in obj["variables"])
        vertices = tuple(
            (
                item["label"],
                tuple(
                    sorted(
                        ((VarName.parse(n), rat(x)) for n, x in item["point"].items()),
                        key=lambda t: t[0].components,
                    )
                ),
            )
            for item in obj["vertices"]
        )
        rows = tuple(
            (
                item["label"],
                LinearConstraint.le(
                    {VarName.parse(n): rat(c) for n, c in item["coeffs"].items()},
                    rat(item["rhs"]),
                ),
            )
            for item in obj["rows"]
        )
        lower_map = {VarName.parse(n): rat(x) for n, x in obj.get("lower", {}).items()}
        upper_map = {VarName.parse(n): rat(x) for n, x in obj.get("upper", {}).items()}
        return cls(
            variables,
            vertices,
            rows,
            tuple(lower_map.get(v) for v in variables),
            tuple(upper_map.get(v) for v in variables),
        )


@dataclass(frozen=True)
class SlackMatrix:
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    entries: tuple[tuple[Fraction, ...], ...]

    def entry(self, i: int, j: int) -> Fraction:
        return self.entries[i][j]


def slack_matrix(pair: PolytopePair) -> SlackMatrix:
    rows = []
    for row_label, row in pair.rows:
        out = []
        for col_label, pt in pair.vertices:
            slack = row.rhs - row.evaluate(dict(pt))
            if slack < 0:
                raise NegativeSlackError(
                    "vertex %s violates row %s by %s"
                    % (col_label, row_label, rat_str(-slack))
                )
            out.append(slack)
        rows.append(tuple(out))
    return SlackMatrix(
        tuple(label for label, _ in pair.rows),
        tuple(label for label, _ in pair.vertices),
        tuple(rows),
    )


# ----------------------------------------------------------------------
# the stable set / clique instance family

def set_label(kind: str, graph: Graph, vs: Iterable[int]) -> str:
    return "%s:%s" % (kind, ",".join(graph.names[v] for v in sorted(vs)))


def stable_point(graph: Graph, stable: Iterable[int]) -> dict[VarName, Fraction]:
    chosen = set(stable)
    return {
        vertex_var(name): Fraction(1 if v in chosen else 0)
        for v, name in enumerate(graph.names)
    }


def clique_row(graph: Graph, clique: Sequence[int]) -> LinearConstraint:
    return LinearConstraint.le({vertex_var(graph.names[v]): 1 for v in clique}, 1)


def qstab_formulation(graph: Graph) -> Formulation:
    """x >= 0 plus one row per nonempty clique (singletons give x <= 1)."""
    variables = vertex_vars(graph)
    ineqs = box_rows(variables, 0, None)
    ineqs.extend(clique_row(graph, c) for c in graph.enumerate_cliques())
    return Formulation.of(variables, (), ineqs, ())


def stab_qstab_pair(graph: Graph) -> PolytopePair:
    variables = vertex_vars(graph)
    vertices = tuple(
        (
            set_label("S", graph, s),
            tuple(sorted(stable_point(graph, s).items(), key=lambda t: t[0].components)),
        )
        for s in graph.enumerate_stable_sets(include_empty=True)
    )
    rows = tuple(
        (set_label("C", graph, c), clique_row(graph, c))
        for c in graph.enumerate_cliques()
    )
    n = graph.n
    return PolytopePair(variables, vertices, rows, (Fraction(0),) * n, (Fraction(1),) * n)


def check_sandwich(graph: Graph, form: Formulation, seed: int | None = None) -> Report:
    """Exact two-sided test against the stable set polytope sandwich.

    Side one: every stable set indicator (including the empty set) lifts to a
    feasible point of `form`. Side two: the projection satisfies every
    nonempty clique row and every nonnegativity row, certified by exact LP
    maxima over the shared warm-started program.
    """
    t0 = time.perf_counter()
    expected = set(vertex_vars(graph))
    if set(form.original_vars) != expected:
        raise ValueError("formulation does not live over this graph's vertex variables")

    failures: list[dict] = []
    stables = graph.enumerate_stable_sets(include_empty=True)
    for s in stables:
        fix = stable_point(graph, s)
        res = LpProgram(form.system, fix=fix).feasibility()
        if res.status == INFEASIBLE:
            failures.append(
                {"kind": "vertex-extension", "stable_set": set_label("S", graph, s)}
            )

    prog = LpProgram(form.system)
    cliques = graph.enumerate_cliques()
    for c in cliques:
        res = prog.solve({vertex_var(graph.names[v]): Fraction(1) for v in c}, "max")
        if res.status != OPTIMAL or res.value > 1:
            failures.append(
                {
                    "kind": "clique-bound",
                    "clique": set_label("C", graph, c),
                    "status": res.status,
                    "max": None if res.value is None else rat_str(res.value),
                }
            )
    for v in graph.vertices():
        res = prog.solve({vertex_var(graph.names[v]): Fraction(1)}, "min")
        if res.status != OPTIMAL or res.value < 0:
            failures.append(
                {
                    "kind": "nonnegativity",
                    "vertex": graph.names[v],
                    "status": res.status,
                    "min": None if res.value is None else rat_str(res.value),
                }
            )

    return Report(
        name="sandwich",
        passed=not failures,
        data={
            "graph": graph.to_json(),
            "stable_sets_checked": len(stables),
            "cliques_checked": len(cliques),
        },
        failures=failures,
        seed=seed,
        elapsed_sec=time.perf_counter() - t0,
    )


# ----------------------------------------------------------------------
# projection comparison

def _direction_list(
    variables: Sequence[VarName], directions: int, seed: int
) -> list[dict[VarName, Fraction]]:
    out: list[dict[VarName, Fraction]] = []
    for v in variables:
        out.append({v: Fraction(1)})
        out.append({v: Fraction(-1)})
    rng = random.Random(seed)
    for _ in range(directions):
        while True:
            vec = {v: Fraction(rng.randint(-9, 9)) for v in variables}
            if any(vec.values()):
                break
        out.append(vec)
    return out


def projections_agree(
    first: Formulation,
    second: Formulation,
    directions: int = 200,
    seed: int = 0,
    exact: bool = False,
) -> Report:
    """Compare projections onto the shared original space.

    Always: exact LP maxima along +-unit directions and `directions` seeded
    random integer directions must coincide. With exact=True the projections
    are additionally computed by variable elimination and compared by mutual
    LP implication, which decides equality outright (subject to the
    elimination variable cap).
    """
    t0 = time.perf_counter()
    if set(first.original_vars) != set(second.original_vars):
        raise ValueError("formulations live over different original spaces")
    variables = first.original_vars

    failures: list[dict] = []
    prog1 = LpProgram(first.system)
    prog2 = LpProgram(second.system)
    for vec in _direction_list(variables, directions, seed):
        r1 = prog1.solve(vec, "max")
        r2 = prog2.solve(vec, "max")
        if r1.status != r2.status or (
            r1.status == OPTIMAL and r1.value != r2.value
        ):
            failures.append(
                {
                    "kind": "direction",
                    "direction": {v.text: rat_str(c) for v, c in vec.items()},
                    "first": (r1.status, None if r1.value is None else rat_str(r1.value)),
                    "second": (r2.status, None if r2.value is None else rat_str(r2.value)),
                }
            )

    data: dict = {"directions": directions}
    if exact:
        proj1 = fourier_motzkin(first.system, variables)
        proj2 = fourier_motzkin(second.system, variables)
        equal, witness = systems_equal_lp(proj1, proj2)
        data["exact"] = "equal" if equal else "differs"
        if not equal:
            failures.append({"kind": "exact-projection", "witness": witness})

    return Report(
        name="projections-agree",
        passed=not failures,
        data=data,
        failures=failures,
        seed=seed,
        elapsed_sec=time.perf_counter() - t0,
    )


# ----------------------------------------------------------------------
# Fourier-Motzkin elimination

class VariableCapError(ValueError):
    """Refusing elimination on a system above the variable cap."""


def _normalize_row(row: LinearConstraint) -> LinearConstraint:
    if not row.terms:
        return row
    lead = abs(row.terms[0][1])
    return row if lead == 1 else row.scaled(Fraction(1) / lead)


def _prune_rows(
    variables: Sequence[VarName], rows: list[LinearConstraint], eqs: list[LinearConstraint]
) -> list[LinearConstraint]:
    # syntactic pass first: normalize, dedupe, drop trivially true rows
    seen = set()
    kept: list[LinearConstraint] = []
    for row in rows:
        row = _normalize_row(row)
        if not row.terms and row.rhs >= 0:
            continue
        if row in seen:
            continue
        seen.add(row)
        kept.append(row)

    # LP pass: drop any row implied by the rest (checked one at a time)
    i = 0
    while i < len(kept):
        others = kept[:i] + kept[i + 1 :]
        system = LinearSystem.of(variables, others, eqs)
        res = LpProgram(system).solve(kept[i].coeffs, "max")
        if res.status == OPTIMAL and res.value <= kept[i].rhs:
            kept.pop(i)
        else:
            i += 1
    return kept


def fourier_motzkin(
    system: LinearSystem, keep: Sequence[VarName], cap: int = 14
) -> LinearSystem:
    """Exact projection onto `keep` by variable elimination.

    Equations are used as substitutions first; remaining variables leave one
    at a time (fewest pos*neg products first) with LP-redundancy pruning per
    round. Exponential in the worst case, hence the total-variable cap.
    """
    if len(system.variables) > cap:
        raise VariableCapError(
            "system has %d variables, cap is %d" % (len(system.variables), cap)
        )
    keep = tuple(keep)
    keep_set = set(keep)
    for v in keep_set:
        if v not in set(system.variables):
            raise ValueError("keep variable %s not in system" % v)

    ineqs = list(system.inequalities)
    eqs = list(system.equations)

    # substitution phase: spend equations to kill eliminable variables
    changed = True
    while changed:
        changed = False
        for idx, eq in enumerate(eqs):
            target = next(
                (v for v, _ in eq.terms if v not in keep_set), None
            )
            if target is None:
                continue
            a = eq.coeff(target)
            rest = {v: c for v, c in eq.terms if v != target}
            # target = (rhs - rest) / a
            def subst(row: LinearConstraint) -> LinearConstraint:
                c = row.coeff(target)
                if c == 0:
                    return row
                coeffs = row.coeffs
                del coeffs[target]
                for v, rc in rest.items():
                    coeffs[v] = coeffs.get(v, Fraction(0)) - c * rc / a
                return LinearConstraint.of(
                    coeffs, row.relation, row.rhs - c * eq.rhs / a
                )

            eqs = [subst(e) for j, e in enumerate(eqs) if j != idx]
            ineqs = [subst(r) for r in ineqs]
            changed = True
            break

    pending = sorted(
        {
            v
            for row in ineqs
            for v in row.variables()
            if v not in keep_set
        },
        key=lambda v: v.components,
    )

    while pending:
        # cheapest variable first: fewest pairwise combinations
        def cost(v: VarName) -> int:
            pos = sum(1 for r in ineqs if r.coeff(v) > 0)
            neg = sum(1 for r in ineqs if r.coeff(v) < 0)
            return pos * neg

        pending.sort(key=lambda v: (cost(v), v.components))
        var = pending.pop(0)
        pos = [r for r in ineqs if r.coeff(var) > 0]
        neg = [r for r in ineqs if r.coeff(var) < 0]
        rest = [r for r in ineqs if r.coeff(var) == 0]
        for p in pos:
            ps = p.scaled(Fraction(1) / p.coeff(var))
            for m in neg:
                ms = m.scaled(Fraction(-1) / m.coeff(var))
                coeffs = ps.coeffs
                for v, c in ms.terms:
                    coeffs[v] = coeffs.get(v, Fraction(0)) + c
                rest.append(LinearConstraint.le(coeffs, ps.rhs + ms.rhs))
        live = keep + tuple(pending)
        ineqs = _prune_rows(live, rest, eqs)

    return LinearSystem.of(keep, ineqs, eqs)


def systems_equal_lp(
    first: LinearSystem, second: LinearSystem
) -> tuple[bool, dict | None]:
    """Mutual implication of two systems over the same variables, by LP."""
    feas1 = LpProgram(first).feasibility().status
    feas2 = LpProgram(second).feasibility().status
    if INFEASIBLE in (feas1, feas2):
        if feas1 == feas2:
            return True, None
        return False, {"reason": "one side is empty", "first": feas1, "second": feas2}

    def implied(system: LinearSystem, sys_label: str, other: LinearSystem) -> dict | None:
        prog = LpProgram(other)
        for row in system.constraints():
            checks = [("max", row.rhs)]
            if row.relation == EQ_REL:
                checks.append(("min", row.rhs))
            for sense, bound in checks:
                res = prog.solve(row.coeffs, sense)
                ok = (
                    res.status == OPTIMAL
                    and (res.value <= bound if sense == "max" else res.value >= bound)
                )
                if not ok:
                    return {
                        "row": str(row),
                        "of": sys_label,
                        "sense": sense,
                        "status": res.status,
                        "value": None if res.value is None else rat_str(res.value),
                    }
        return None

    witness = implied(first, "first", second)
    if witness is None:
        witness = implied(second, "second", first)
    return witness is None, witness


# ----------------------------------------------------------------------
# rectangle partitions against a slack matrix

def verify_partition(partition, matrix: SlackMatrix, max_witnesses: int = 20) -> Report:
    """Disjointness, coverage, and constant value of every rectangle,
    checked entry by entry against the matrix."""
    t0 = time.perf_counter()
    row_index = {label: i for i, label in enumerate(matrix.row_labels)}
    col_index = {label: j for j, label in enumerate(matrix.col_labels)}
    failures: list[dict] = []

    def fail(item: dict) -> None:
        if len(failures) < max_witnesses:
            failures.append(item)

    total_bad = 0
    owner: dict[tuple[int, int], int] = {}
    for k, rect in enumerate(partition.rectangles):
        for r in rect.rows:
            if r not in row_index:
                fail({"kind": "unknown-row", "rectangle": k, "row": r})
                total_bad += 1
        for c in rect.cols:
            if c not in col_index:
                fail({"kind": "unknown-col", "rectangle": k, "col": c})
                total_bad += 1
        for r in rect.rows:
            if r not in row_index:
                continue
            for c in rect.cols:
                if c not in col_index:
                    continue
                cell = (row_index[r], col_index[c])
                if cell in owner:
                    fail(
                        {
                            "kind": "overlap",
                            "entry": [r, c],
                            "rectangles": [owner[cell], k],
                        }
                    )
                    total_bad += 1
                else:
                    owner[cell] = k
                value = matrix.entry(*cell)
                if value != rect.value:
                    fail(
                        {
                            "kind": "not-monochromatic",
                            "rectangle": k,
                            "entry": [r, c],
                            "matrix": rat_str(value),
                            "claimed": rat_str(rect.value),
                        }
                    )
                    total_bad += 1

    for i, rlab in enumerate(matrix.row_labels):
        for j, clab in enumerate(matrix.col_labels):
            if (i, j) not in owner:
                fail({"kind": "gap", "entry": [rlab, clab]})
                total_bad += 1

    return Report(
        name="partition",
        passed=total_bad == 0,
        data={
            "rectangles": len(partition.rectangles),
            "rows": len(matrix.row_labels),
            "cols": len(matrix.col_labels),
            "violations": total_bad,
        },
        failures=failures,
        elapsed_sec=time.perf_counter() - t0,
    )
