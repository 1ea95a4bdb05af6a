"""Exact rational linear programming.

The pipeline is presolve followed by a sparse two-phase primal simplex:

* presolve: substitute fixed variables, harvest singleton rows into bounds,
  eliminate two-variable equations by substitution (their bounds transfer
  exactly, so no fill-in and no synthesized rows), detect forcing rows whose
  minimum or maximum activity meets the right-hand side, and drop rows that
  can never bind. Membership tests of 0/1 points collapse almost entirely
  inside this loop.
* simplex: remaining variables are shifted, mirrored, or split so every
  tableau column is nonnegative; <= rows get slacks; rows that still lack a
  basic column get artificials which phase one drives out. The entering
  column is the sparsest improving one (exact arithmetic pays per nonzero,
  so fill-in control beats steep reduced costs); ratio-test ties break by a
  seeded RNG, which escapes the long degenerate plateaus these disjunctive
  systems produce. After a long run of degenerate pivots the rule switches
  permanently to Bland's, restoring the termination guarantee.

Internally coefficients are gmpy2.mpq when available (about 10x faster than
Fraction); the public API speaks fractions.Fraction only. The tableau
persists across `solve` calls, so sweeping many objectives over one feasible
system pays the phase-one cost once.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .core import (
    EQ_REL,
    LE_REL,
    LinearSystem,
    MissingVariableError,
    RatLike,
    VarName,
    rat,
)

try:
    from gmpy2 import mpq as _Q

    def _to_frac(value) -> Fraction:
        return Fraction(int(value.numerator), int(value.denominator))

except ImportError:  # pragma: no cover - exercised only without gmpy2
    _Q = Fraction

    def _to_frac(value) -> Fraction:
        return value


__all__ = ["OPTIMAL", "INFEASIBLE", "UNBOUNDED", "LpResult", "LpProgram"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpResult:
    status: str
    value: Fraction | None
    point: dict[VarName, Fraction] | None


class _Infeasible(Exception):
    pass


def _q(value: RatLike):
    f = rat(value)
    return _Q(f.numerator, f.denominator)


class LpProgram:
    """One linear system held in presolved tableau form.

    `fix` pins variables to values before presolve runs; this is the fast
    path for membership tests. After construction, call `solve` any number
    of times with different objectives, or `feasibility` once.
    """

    def __init__(
        self,
        system: LinearSystem,
        fix: Mapping[VarName, RatLike] | None = None,
    ) -> None:
        self._vars: tuple[VarName, ...] = system.variables
        self._vid = {v: i for i, v in enumerate(self._vars)}
        n = len(self._vars)

        # mutable presolve state
        self._rows: list[dict] = []  # row id -> {"c": {col: mpq}, "rel": str, "rhs": mpq}
        self._alive: list[bool] = []
        self._occ: dict[int, set[int]] = {j: set() for j in range(n)}
        self._lo: list = [None] * n
        self._up: list = [None] * n
        self._stack: list[tuple] = []  # ("fix", j, val) | ("sub", j, {k: alpha}, const)
        self._gone: set[int] = set()  # cols no longer live (fixed or substituted)
        self._status: str | None = None
        self._tableau_ready = False
        self._work: set[int] = set()

        seen_rows: set = set()
        for row in system.constraints():
            cols = {}
            for var, val in row.terms:
                cols[self._vid[var]] = _q(val)
            key = (row.relation, _q(row.rhs), tuple(sorted(cols.items())))
            if key in seen_rows:
                continue  # duplicate rows cannot change the feasible set
            seen_rows.add(key)
            rid = len(self._rows)
            self._rows.append({"c": cols, "rel": row.relation, "rhs": _q(row.rhs)})
            self._alive.append(True)
            for j in cols:
                self._occ[j].add(rid)

        try:
            if fix:
                for var, val in fix.items():
                    if var not in self._vid:
                        raise MissingVariableError(var.text)
                    self._fix(self._vid[var], _q(val))
            self._presolve()
        except _Infeasible:
            self._status = INFEASIBLE

    # ------------------------------------------------------------------
    # presolve

    def _touch(self, rid: int) -> None:
        if self._alive[rid]:
            self._work.add(rid)

    def _kill_row(self, rid: int) -> None:
        if not self._alive[rid]:
            return
        self._alive[rid] = False
        for j in self._rows[rid]["c"]:
            self._occ[j].discard(rid)
        self._work.discard(rid)

    def _fix(self, j: int, val) -> None:
        if j in self._gone:
            raise AssertionError("double fix of column %d" % j)
        lo, up = self._lo[j], self._up[j]
        if (lo is not None and val < lo) or (up is not None and val > up):
            raise _Infeasible
        self._gone.add(j)
        self._stack.append(("fix", j, val))
        self._lo[j] = self._up[j] = None
        for rid in list(self._occ.pop(j, ())):
            row = self._rows[rid]
            row["rhs"] -= row["c"].pop(j) * val
            self._touch(rid)
        self._occ[j] = set()

    def _substitute(self, j: int, k: int, alpha, const) -> None:
        """Replace x_j by const + alpha * x_k everywhere."""
        self._gone.add(j)
        self._stack.append(("sub", j, {k: alpha}, const))
        self._lo[j] = self._up[j] = None
        for rid in list(self._occ.pop(j, ())):
            row = self._rows[rid]
            c = row["c"].pop(j)
            row["rhs"] -= c * const
            add = c * alpha
            cur = row["c"].get(k)
            new = add if cur is None else cur + add
            if new == 0:
                if cur is not None:
                    del row["c"][k]
                    self._occ[k].discard(rid)
            else:
                if cur is None:
                    self._occ[k].add(rid)
                row["c"][k] = new
            self._touch(rid)
        self._occ[j] = set()

    def _tighten_lo(self, j: int, val) -> None:
        if j in self._gone:
            raise AssertionError("bound on dead column")
        if self._lo[j] is None or val > self._lo[j]:
            self._lo[j] = val
            up = self._up[j]
            if up is not None:
                if val > up:
                    raise _Infeasible
                if val == up:
                    self._fix(j, val)
                    return
            for rid in list(self._occ[j]):
                self._touch(rid)

    def _tighten_up(self, j: int, val) -> None:
        if j in self._gone:
            raise AssertionError("bound on dead column")
        if self._up[j] is None or val < self._up[j]:
            self._up[j] = val
            lo = self._lo[j]
            if lo is not None:
                if val < lo:
                    raise _Infeasible
                if val == lo:
                    self._fix(j, val)
                    return
            for rid in list(self._occ[j]):
                self._touch(rid)

    def _activity_bounds(self, cols) -> tuple:
        """(min, max) of the row's lhs over the current bounds; None = infinite."""
        amin = _Q(0)
        amax = _Q(0)
        for j, c in cols.items():
            lo, up = self._lo[j], self._up[j]
            if amin is not None:
                end = lo if c > 0 else up
                amin = None if end is None else amin + c * end
            if amax is not None:
                end = up if c > 0 else lo
                amax = None if end is None else amax + c * end
        return amin, amax

    def _force_all(self, cols, to_min: bool) -> None:
        for j, c in list(cols.items()):
            if to_min:
                self._fix(j, self._lo[j] if c > 0 else self._up[j])
            else:
                self._fix(j, self._up[j] if c > 0 else self._lo[j])

    def _presolve(self) -> None:
        self._work: set[int] = {i for i in range(len(self._rows)) if self._alive[i]}
        self._queue_pass()
        while True:
            changed = self._eliminate_free_singletons()
            changed = self._eliminate_free_pairs() or changed
            if not changed:
                break
            self._queue_pass()

    def _queue_pass(self) -> None:
        while self._work:
            rid = self._work.pop()
            if not self._alive[rid]:
                continue
            row = self._rows[rid]
            cols, rel, rhs = row["c"], row["rel"], row["rhs"]

            if not cols:
                if (rel == LE_REL and rhs < 0) or (rel == EQ_REL and rhs != 0):
                    raise _Infeasible
                self._kill_row(rid)
                continue

            if len(cols) == 1:
                ((j, a),) = cols.items()
                self._kill_row(rid)
                if rel == EQ_REL:
                    self._fix(j, rhs / a)
                elif a > 0:
                    self._tighten_up(j, rhs / a)
                else:
                    self._tighten_lo(j, rhs / a)
                continue

            if len(cols) == 2 and rel == EQ_REL:
                (j, a), (k, b) = sorted(cols.items())
                # prefer eliminating an unbounded column; ties keep the later one
                def unbound(col: int) -> bool:
                    return self._lo[col] is None and self._up[col] is None

                if unbound(j) and not unbound(k):
                    pass
                elif unbound(k) and not unbound(j):
                    j, a, k, b = k, b, j, a
                elif len(self._occ[j]) <= len(self._occ[k]):
                    pass
                else:
                    j, a, k, b = k, b, j, a
                alpha = -b / a
                const = rhs / a
                lo_j, up_j = self._lo[j], self._up[j]
                self._kill_row(rid)
                self._substitute(j, k, alpha, const)
                # transfer the eliminated column's bounds onto the survivor
                if alpha > 0:
                    if lo_j is not None:
                        self._tighten_lo(k, (lo_j - const) / alpha)
                    if k not in self._gone and up_j is not None:
                        self._tighten_up(k, (up_j - const) / alpha)
                else:
                    if up_j is not None:
                        self._tighten_lo(k, (up_j - const) / alpha)
                    if k not in self._gone and lo_j is not None:
                        self._tighten_up(k, (lo_j - const) / alpha)
                continue

            amin, amax = self._activity_bounds(cols)
            if rel == LE_REL:
                if amin is not None:
                    if amin > rhs:
                        raise _Infeasible
                    if amin == rhs:
                        self._kill_row(rid)
                        self._force_all(cols, to_min=True)
                        continue
                if amax is not None and amax <= rhs:
                    self._kill_row(rid)
            else:
                if amin is not None and amin > rhs:
                    raise _Infeasible
                if amax is not None and amax < rhs:
                    raise _Infeasible
                if amin is not None and amin == rhs:
                    self._kill_row(rid)
                    self._force_all(cols, to_min=True)
                elif amax is not None and amax == rhs:
                    self._kill_row(rid)
                    self._force_all(cols, to_min=False)

    def _eliminate_free_singletons(self) -> bool:
        """A column with no bounds and a single (equation) occurrence absorbs
        that row: solving the row for the column changes no other row, and the
        recovery stack reconstructs its value afterwards. Disaggregated
        union copies outside their fixing window all fall to this rule."""
        did = False
        for j in range(len(self._vars)):
            if j in self._gone or self._lo[j] is not None or self._up[j] is not None:
                continue
            if len(self._occ[j]) != 1:
                continue
            (rid,) = self._occ[j]
            row = self._rows[rid]
            if row["rel"] != EQ_REL:
                continue
            cols = dict(row["c"])
            a = cols.pop(j)
            coeffs = {k: -v / a for k, v in cols.items()}
            const = row["rhs"] / a
            self._kill_row(rid)
            self._gone.add(j)
            self._stack.append(("sub", j, coeffs, const))
            self._occ[j] = set()
            did = True
        return did

    # fill-in cap for the two-occurrence elimination; chains produced by
    # folded unions have 3-term rows, well under this
    _PAIR_ROW_CAP = 8

    def _eliminate_free_pairs(self) -> bool:
        """Gaussian step on a free column appearing in exactly two equations:
        solve the smaller row for it and merge into the other. Strictly
        reduces row count; collapses the copy chains left by folded unions."""
        did = False
        for j in range(len(self._vars)):
            if j in self._gone or self._lo[j] is not None or self._up[j] is not None:
                continue
            if len(self._occ[j]) != 2:
                continue
            r1, r2 = sorted(self._occ[j], key=lambda r: len(self._rows[r]["c"]))
            if self._rows[r1]["rel"] != EQ_REL or self._rows[r2]["rel"] != EQ_REL:
                continue
            if len(self._rows[r1]["c"]) > self._PAIR_ROW_CAP:
                continue
            cols = dict(self._rows[r1]["c"])
            a = cols.pop(j)
            coeffs = {k: -v / a for k, v in cols.items()}
            const = self._rows[r1]["rhs"] / a
            self._kill_row(r1)
            self._gone.add(j)
            self._stack.append(("sub", j, coeffs, const))
            self._occ[j] = set()
            row = self._rows[r2]
            c = row["c"].pop(j)
            row["rhs"] -= c * const
            for k, alpha in coeffs.items():
                add = c * alpha
                cur = row["c"].get(k)
                new = add if cur is None else cur + add
                if new == 0:
                    if cur is not None:
                        del row["c"][k]
                        self._occ[k].discard(r2)
                else:
                    if cur is None:
                        self._occ[k].add(r2)
                    row["c"][k] = new
            self._touch(r2)
            did = True
        return did

    # ------------------------------------------------------------------
    # tableau construction and phase one

    def _ensure_tableau(self) -> None:
        if self._status == INFEASIBLE or self._tableau_ready:
            return

        n = len(self._vars)
        live = [j for j in range(n) if j not in self._gone]
        self._smap: dict[int, tuple] = {}  # var col -> mapping record
        raw_rows: list[tuple[dict, str]] = []  # (cols over simplex ids, rel), rhs parallel
        raw_rhs: list = []
        next_col = 0

        def fresh() -> int:
            nonlocal next_col
            next_col += 1
            return next_col - 1

        for j in live:
            lo, up = self._lo[j], self._up[j]
            if lo is not None:
                sc = fresh()
                self._smap[j] = ("shift", lo, sc)
                if up is not None:
                    raw_rows.append(({sc: _Q(1)}, LE_REL))
                    raw_rhs.append(up - lo)
            elif up is not None:
                sc = fresh()
                self._smap[j] = ("mirror", up, sc)
            else:
                pc, mc = fresh(), fresh()
                self._smap[j] = ("split", pc, mc)

        for rid, row in enumerate(self._rows):
            if not self._alive[rid]:
                continue
            out: dict = {}
            rhs = row["rhs"]
            for j, c in row["c"].items():
                rec = self._smap[j]
                if rec[0] == "shift":
                    rhs -= c * rec[1]
                    out[rec[2]] = out.get(rec[2], _Q(0)) + c
                elif rec[0] == "mirror":
                    rhs -= c * rec[1]
                    out[rec[2]] = out.get(rec[2], _Q(0)) - c
                else:
                    out[rec[1]] = out.get(rec[1], _Q(0)) + c
                    out[rec[2]] = out.get(rec[2], _Q(0)) - c
            out = {k: v for k, v in out.items() if v != 0}
            raw_rows.append((out, row["rel"]))
            raw_rhs.append(rhs)

        # standard form: every row an equation with rhs >= 0, slack where possible
        self._T: list[dict] = []
        self._rhs: list = []
        self._basis: list[int | None] = []
        self._dead: set[int] = set()
        art_cols: list[int] = []
        for (cols, rel), rhs in zip(raw_rows, raw_rhs):
            cols = dict(cols)
            slack_col = None
            if rel == LE_REL:
                slack_col = fresh()
                cols[slack_col] = _Q(1)
            if rhs < 0:
                rhs = -rhs
                cols = {j: -c for j, c in cols.items()}
            basic = None
            if slack_col is not None and cols[slack_col] == 1:
                basic = slack_col
            if basic is None:
                a = fresh()
                art_cols.append(a)
                cols[a] = _Q(1)
                basic = a
            self._T.append(cols)
            self._rhs.append(rhs)
            self._basis.append(basic)

        self._ncols = next_col
        self._occ_t: dict[int, set[int]] = {}
        for i, cols in enumerate(self._T):
            for j in cols:
                self._occ_t.setdefault(j, set()).add(i)

        self._tableau_ready = True
        if art_cols:
            art = set(art_cols)
            cost = {a: _Q(-1) for a in art_cols}
            self._load_costs(cost)
            # once an artificial leaves the basis it must never come back
            self._run_simplex(blocked=art)
            bad = any(
                self._basis[i] in art and self._rhs[i] != 0
                for i in range(len(self._T))
                if i not in self._dead
            )
            if bad:
                self._status = INFEASIBLE
                return
            self._drive_out(art)

    def _drive_out(self, art: set[int]) -> None:
        """Remove artificial columns; basic ones sit at zero and pivot away."""
        for i in range(len(self._T)):
            if i in self._dead or self._basis[i] not in art:
                continue
            pivot_col = None
            for j in self._T[i]:
                if j not in art:
                    pivot_col = j if pivot_col is None or j < pivot_col else pivot_col
            if pivot_col is None:
                # row only supports artificials: it was redundant
                for j in self._T[i]:
                    self._occ_t[j].discard(i)
                self._T[i] = {}
                self._basis[i] = None
                self._dead.add(i)
            else:
                self._pivot(i, pivot_col)
        for a in art:
            for i in list(self._occ_t.get(a, ())):
                self._T[i].pop(a, None)
            self._occ_t.pop(a, None)

    # ------------------------------------------------------------------
    # simplex core

    def _load_costs(self, cost: dict) -> None:
        reduced = dict(cost)
        for i, b in enumerate(self._basis):
            if i in self._dead or b is None:
                continue
            cb = cost.get(b)
            if not cb:
                continue
            for j, a in self._T[i].items():
                val = reduced.get(j, _Q(0)) - cb * a
                if val == 0:
                    reduced.pop(j, None)
                else:
                    reduced[j] = val
        self._cost = {j: v for j, v in reduced.items() if v != 0}

    def _pivot(self, prow: int, pcol: int) -> None:
        row = self._T[prow]
        a = row[pcol]
        if a != 1:
            for j in list(row):
                row[j] /= a
            self._rhs[prow] /= a
        for i in list(self._occ_t.get(pcol, ())):
            if i == prow or i in self._dead:
                continue
            target = self._T[i]
            f = target.get(pcol)
            if not f:
                continue
            for j, v in row.items():
                cur = target.get(j)
                new = (cur if cur is not None else _Q(0)) - f * v
                if new == 0:
                    if cur is not None:
                        del target[j]
                        self._occ_t[j].discard(i)
                else:
                    if cur is None:
                        self._occ_t.setdefault(j, set()).add(i)
                    target[j] = new
            self._rhs[i] -= f * self._rhs[prow]
        f = self._cost.get(pcol)
        if f:
            for j, v in row.items():
                cur = self._cost.get(j, _Q(0)) - f * v
                if cur == 0:
                    self._cost.pop(j, None)
                else:
                    self._cost[j] = cur
        self._basis[prow] = pcol

    # degenerate pivots tolerated before falling back to Bland's rule; any
    # cycle is all-degenerate, so the switch guarantees termination
    _STALL_LIMIT = 200

    def _run_simplex(self, blocked: set | None) -> str:
        """Maximize the loaded cost row."""
        if not hasattr(self, "_rng"):
            self._rng = random.Random(0x5EED)
        stall = 0
        bland = False
        while True:
            enter = None
            if bland:
                for j, v in self._cost.items():
                    if v > 0 and (blocked is None or j not in blocked):
                        if enter is None or j < enter:
                            enter = j
            else:
                # sparsest improving column: exact arithmetic pays per nonzero
                # touched, so small fill-in beats a steep reduced cost
                best_k = None
                for j, v in self._cost.items():
                    if v > 0 and (blocked is None or j not in blocked):
                        key = (len(self._occ_t.get(j, ())), -v, j)
                        if best_k is None or key < best_k:
                            enter, best_k = j, key
            if enter is None:
                return OPTIMAL
            ratio = None
            ties: list[int] = []
            for i in self._occ_t.get(enter, ()):
                if i in self._dead:
                    continue
                a = self._T[i].get(enter)
                if a is None or a <= 0:
                    continue
                r = self._rhs[i] / a
                if ratio is None or r < ratio:
                    ratio, ties = r, [i]
                elif r == ratio:
                    ties.append(i)
            if ratio is None:
                return UNBOUNDED
            if bland:
                row = min(ties, key=lambda i: self._basis[i])
            else:
                row = ties[0] if len(ties) == 1 else self._rng.choice(ties)
                if ratio == 0:
                    stall += 1
                    if stall >= self._STALL_LIMIT:
                        bland = True
                else:
                    stall = 0
            self._pivot(row, enter)

    # ------------------------------------------------------------------
    # objective mapping and recovery

    def _expand_objective(self, objective: Mapping[VarName, RatLike]) -> dict:
        """Push an objective through fixes and substitutions onto live cols."""
        pending: list[tuple[int, object]] = []
        for var, val in objective.items():
            if var not in self._vid:
                raise MissingVariableError(var.text)
            q = _q(val)
            if q != 0:
                pending.append((self._vid[var], q))
        sub_idx = {}
        for rec in self._stack:
            if rec[0] == "sub":
                sub_idx[rec[1]] = rec
            else:
                sub_idx[rec[1]] = rec
        out: dict[int, object] = {}
        while pending:
            j, c = pending.pop()
            if j in self._gone:
                rec = sub_idx[j]
                if rec[0] == "fix":
                    continue  # constant term; value recomputed from the point
                _, _, coeffs, _ = rec
                for k, alpha in coeffs.items():
                    pending.append((k, c * alpha))
            else:
                out[j] = out.get(j, _Q(0)) + c
        return {j: v for j, v in out.items() if v != 0}

    def _cost_on_simplex_cols(self, reduced_obj: dict) -> dict:
        cost: dict[int, object] = {}

        def add(col: int, val) -> None:
            cur = cost.get(col, _Q(0)) + val
            if cur == 0:
                cost.pop(col, None)
            else:
                cost[col] = cur

        for j, c in reduced_obj.items():
            rec = self._smap[j]
            if rec[0] == "shift":
                add(rec[2], c)
            elif rec[0] == "mirror":
                add(rec[2], -c)
            else:
                add(rec[1], c)
                add(rec[2], -c)
        return cost

    def _recover_point(self) -> dict[VarName, Fraction]:
        sval: dict[int, object] = {}
        for i, b in enumerate(self._basis):
            if i in self._dead or b is None:
                continue
            sval[b] = self._rhs[i]
        values: dict[int, object] = {}
        for j, rec in self._smap.items():
            if rec[0] == "shift":
                values[j] = rec[1] + sval.get(rec[2], _Q(0))
            elif rec[0] == "mirror":
                values[j] = rec[1] - sval.get(rec[2], _Q(0))
            else:
                values[j] = sval.get(rec[1], _Q(0)) - sval.get(rec[2], _Q(0))
        for rec in reversed(self._stack):
            if rec[0] == "fix":
                values[rec[1]] = rec[2]
            else:
                _, j, coeffs, const = rec
                acc = const
                for k, alpha in coeffs.items():
                    acc = acc + alpha * values[k]
                values[j] = acc
        return {self._vars[j]: _to_frac(values[j]) for j in range(len(self._vars))}

    # ------------------------------------------------------------------
    # public API

    def feasibility(self) -> LpResult:
        """Phase one only: a feasible point, or status infeasible."""
        self._ensure_tableau()
        if self._status == INFEASIBLE:
            return LpResult(INFEASIBLE, None, None)
        return LpResult(OPTIMAL, None, self._recover_point())

    def solve(self, objective: Mapping[VarName, RatLike], sense: str = "max") -> LpResult:
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        self._ensure_tableau()
        if self._status == INFEASIBLE:
            return LpResult(INFEASIBLE, None, None)
        reduced = self._expand_objective(objective)
        if sense == "min":
            reduced = {j: -c for j, c in reduced.items()}
        self._load_costs(self._cost_on_simplex_cols(reduced))
        status = self._run_simplex(blocked=None)
        if status == UNBOUNDED:
            return LpResult(UNBOUNDED, None, None)
        point = self._recover_point()
        value = Fraction(0)
        for var, val in objective.items():
            value += rat(val) * point[var]
        return LpResult(OPTIMAL, value, point)
