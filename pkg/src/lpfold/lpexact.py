"""Small exact rational LP solver: two-phase bounded-variable primal simplex.

Dantzig pricing with a switch to Bland's rule after a streak of degenerate
pivots, so termination is guaranteed while typical desk-scale solves stay
quick.  Everything is int/Fraction arithmetic; returned points satisfy the
rows exactly and are basic solutions (vertices).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from .model import Problem, standard_form
from .rationals import NEG_INF, POS_INF, Rational, is_finite, normalize

_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3
_DEGENERATE_STREAK = 40
SIZE_GUARDRAIL = 500


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[List[Rational]] = None
    objective: Optional[Rational] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


class _Simplex:
    def __init__(self, problem: Problem):
        eq, self.n_user = standard_form(problem)
        self.problem = problem
        self.m = eq.nrows
        self.lower: List = list(eq.lower)
        self.upper: List = list(eq.upper)
        self.cost: List[Rational] = list(eq.objective)
        self.n = eq.ncols
        # artificial columns appended after the real ones
        self.n_total = self.n + self.m
        self.status = [0] * self.n_total
        for j in range(self.n):
            if is_finite(self.lower[j]):
                self.status[j] = _AT_LOWER
            elif is_finite(self.upper[j]):
                self.status[j] = _AT_UPPER
            else:
                self.status[j] = _FREE
        resid = list(eq.rhs)
        for j in range(self.n):
            val = self._nonbasic_value(j)
            if val:
                for v, a in eq.matrix.cols[j].items():
                    resid[v] -= a * val
        self.art_sign = [1 if r >= 0 else -1 for r in resid]
        # dense tableau rows: T = diag(sign) * [A | signed identity]
        self.T: List[List[Rational]] = []
        for v in range(self.m):
            row = [0] * self.n_total
            s = self.art_sign[v]
            for w, a in eq.matrix.rows[v].items():
                row[w] = s * a
            row[self.n + v] = 1
            self.T.append(row)
        self.basis = [self.n + v for v in range(self.m)]
        self.xb: List[Rational] = [normalize(self.art_sign[v] * resid[v])
                                   for v in range(self.m)]
        for v in range(self.m):
            self.lower.append(0)
            self.upper.append(POS_INF)
            self.cost.append(0)
            self.status[self.n + v] = _BASIC

    def _nonbasic_value(self, j: int) -> Rational:
        st = self.status[j]
        if st == _AT_LOWER:
            return self.lower[j]
        if st == _AT_UPPER:
            return self.upper[j]
        return 0

    def _reduced_costs(self, cost: Sequence[Rational]) -> List[Rational]:
        d = list(cost)
        for i, bj in enumerate(self.basis):
            cb = cost[bj]
            if cb:
                row = self.T[i]
                for j in range(self.n_total):
                    if row[j]:
                        d[j] -= cb * row[j]
        return [normalize(v) for v in d]

    def _pivot(self, row: int, col: int) -> None:
        # Transforms the tableau only; basic values are maintained by the caller.
        T = self.T
        prow = T[row]
        piv = prow[col]
        if piv != 1:
            inv = Fraction(1, 1) / piv
            T[row] = prow = [normalize(v * inv) if v else 0 for v in prow]
        for i in range(self.m):
            if i == row:
                continue
            f = T[i][col]
            if f:
                ri = T[i]
                T[i] = [normalize(a - f * b) if b else a for a, b in zip(ri, prow)]

    def _iterate(self, cost: Sequence[Rational], allow_unbounded: bool) -> str:
        d = self._reduced_costs(cost)
        degenerate = 0
        bland = False
        while True:
            enter = -1
            best = 0
            for j in range(self.n_total):
                st = self.status[j]
                if st == _BASIC or self.lower[j] == self.upper[j]:
                    continue
                dj = d[j]
                if st == _AT_UPPER:
                    viol = dj if dj > 0 else 0
                elif st == _AT_LOWER:
                    viol = -dj if dj < 0 else 0
                else:  # free at zero
                    viol = dj if dj > 0 else -dj
                if viol > 0:
                    if bland:
                        enter = j
                        break
                    if viol > best:
                        best = viol
                        enter = j
            if enter < 0:
                return "optimal"

            direction = 1
            if self.status[enter] == _AT_UPPER or (self.status[enter] == _FREE and d[enter] > 0):
                direction = -1

            theta = None  # None = unlimited
            leave = -1
            leave_to = _AT_LOWER
            if is_finite(self.lower[enter]) and is_finite(self.upper[enter]):
                theta = normalize(self.upper[enter] - self.lower[enter])
            for i in range(self.m):
                y = self.T[i][enter] * direction
                if y > 0:
                    lo = self.lower[self.basis[i]]
                    if not is_finite(lo):
                        continue
                    limit = normalize(Fraction(self.xb[i] - lo, y))
                    to = _AT_LOWER
                elif y < 0:
                    hi = self.upper[self.basis[i]]
                    if not is_finite(hi):
                        continue
                    limit = normalize(Fraction(hi - self.xb[i], -y))
                    to = _AT_UPPER
                else:
                    continue
                if theta is None or limit < theta or (
                        limit == theta and leave >= 0 and self.basis[i] < self.basis[leave]):
                    theta = limit
                    leave = i
                    leave_to = to
            if theta is None:
                if not allow_unbounded:
                    raise AssertionError("phase-1 objective cannot be unbounded")
                return "unbounded"

            if theta == 0:
                degenerate += 1
                if degenerate >= _DEGENERATE_STREAK:
                    bland = True
            else:
                degenerate = 0
                bland = False

            entering_from = self._nonbasic_value(enter)
            if leave < 0:
                # bound flip: no basis change
                new_val = entering_from + direction * theta
                self.status[enter] = _AT_UPPER if self.status[enter] == _AT_LOWER else _AT_LOWER
                for i in range(self.m):
                    a = self.T[i][enter]
                    if a:
                        self.xb[i] = normalize(self.xb[i] - a * (new_val - entering_from))
                continue

            out = self.basis[leave]
            self.status[out] = leave_to
            if theta:
                for i in range(self.m):
                    a = self.T[i][enter]
                    if a:
                        self.xb[i] = normalize(self.xb[i] - a * direction * theta)
            self.xb[leave] = normalize(entering_from + direction * theta)
            self.basis[leave] = enter
            self.status[enter] = _BASIC
            self._pivot(leave, enter)
            de = d[enter]
            if de:
                prow = self.T[leave]
                d = [normalize(a - de * b) if b else a for a, b in zip(d, prow)]

    def solve(self) -> LpResult:
        phase1 = [0] * self.n_total
        for j in range(self.n, self.n_total):
            phase1[j] = 1
        self._iterate(phase1, allow_unbounded=False)
        infeas = normalize(sum(self.xb[i] for i in range(self.m)
                               if self.basis[i] >= self.n))
        if infeas > 0:
            return LpResult("infeasible")
        # pin remaining artificials at zero; pivot them out where possible
        for i in range(self.m):
            if self.basis[i] >= self.n:
                for j in range(self.n):
                    if self.T[i][j] and self.lower[j] != self.upper[j]:
                        out = self.basis[i]
                        self.status[out] = _AT_LOWER
                        self.basis[i] = j
                        old = self._nonbasic_value(j)
                        self.status[j] = _BASIC
                        self.xb[i] = old
                        self._pivot(i, j)
                        break
        for j in range(self.n, self.n_total):
            self.upper[j] = 0

        status = self._iterate(self.cost, allow_unbounded=True)
        if status == "unbounded":
            return LpResult("unbounded")
        x = [self._nonbasic_value(j) for j in range(self.n)]
        for i, bj in enumerate(self.basis):
            if bj < self.n:
                x[bj] = self.xb[i]
        user = [normalize(v) for v in x[: self.n_user]]
        obj = self.problem.objective_value(user)
        return LpResult("optimal", user, obj)


def solve_lp(problem: Problem) -> LpResult:
    """Exact optimum of the LP relaxation (integrality marks ignored).

    Returns a basic solution; the reported objective includes the problem's
    objective offset.
    """
    if problem.ncols > SIZE_GUARDRAIL:
        warnings.warn(
            f"solve_lp on {problem.ncols} columns exceeds the desk-scale "
            f"guardrail ({SIZE_GUARDRAIL}); attempting anyway", stacklevel=2)
    return _Simplex(problem).solve()


def optimal_vertex_on_fiber(fiber, objective: Optional[Sequence[Rational]] = None) -> LpResult:
    """Optimal basic solution of a fiber LP (anything with to_problem()).

    An infeasible fiber is an invariant violation upstream, so it raises
    rather than returning a status.
    """
    problem = fiber.to_problem(objective)
    result = solve_lp(problem)
    if result.status == "infeasible":
        raise RuntimeError(f"fiber LP infeasible; fiber dump: {fiber.dump()}")
    if result.status == "unbounded":
        raise RuntimeError("fiber LP unbounded; objective does not bound the fiber")
    return result
