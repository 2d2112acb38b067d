"""Exact integer aggregation for MILP: reflection refinement combined with a
greedily built affine totally-unimodular decomposition, plus the fiber LPs
that recover integral solutions for the original problem.

The detection runs in five stages: (1) certify continuous connected
components as (transposed) network, absorbing failures into the fractional
row set; (2) group integer columns by oriented nonternary masks; (3) refine;
(4) per integer part, cancel proportional rows into a T-row and augment the
residual columns, individualizing parts that fail; (5) re-refine.  The fiber
uses the stage-4 (coarse) linking parts, never the refined ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .lpexact import LpResult, optimal_vertex_on_fiber
from .model import (
    BiPartition,
    Part,
    Polarity,
    Problem,
    ReflectionReduction,
    RowSense,
    SparseMatrix,
    reduce_matrices,
    standard_form,
)
from .netmat import NetworkMode, NetworkState, augment_network
from .rationals import Rational, is_finite, normalize
from .refine import (
    InitialPartitionSpec,
    compute_delta_center,
    refine_reflection,
    sparsify_delta,
)


def nonternary_mask(column):
    """Zero out the +-1 entries of a sparse or dense vector."""
    if isinstance(column, dict):
        return {r: v for r, v in column.items() if v not in (1, -1)}
    return [0 if v in (1, -1) else v for v in column]


def fractional_rows(problem: Problem) -> Set[int]:
    """Rows carrying a fractional coefficient or right-hand side."""
    out: Set[int] = set()
    for v in range(problem.nrows):
        if Fraction(problem.rhs[v]).denominator != 1:
            out.add(v)
            continue
        for a in problem.matrix.rows[v].values():
            if Fraction(a).denominator != 1:
                out.add(v)
                break
    return out


def _oriented_key(problem: Problem, w: int, v_r: Set[int]):
    """Canonical (group key, orientation) for an integer column: the column
    restricted to fractional rows must match exactly up to a global sign, and
    the nonternary mask of the rest up to the same sign."""
    col = problem.matrix.cols[w]
    vr_part = tuple(sorted((v, a) for v, a in col.items() if v in v_r))
    mask_part = tuple(sorted((v, a) for v, a in col.items()
                             if v not in v_r and a not in (1, -1)))
    fwd = (vr_part, mask_part)
    rev = (tuple((v, -a) for v, a in vr_part), tuple((v, -a) for v, a in mask_part))
    if fwd == rev:
        return fwd, 0
    return (fwd, 1) if fwd <= rev else (rev, -1)


def milp_initial_partition(problem: Problem,
                           v_r: Optional[Set[int]] = None,
                           forced_singletons: Sequence[int] = ()) -> InitialPartitionSpec:
    """Initial column grouping for MILP refinement.

    Integer columns share a group only when their fractional-row entries and
    nonternary masks match up to one global sign; continuous columns stay in
    the default pool, so the partition is always compatible with the integer
    set.  forced_singletons are pinned to unipolar singleton groups.
    """
    if v_r is None:
        v_r = fractional_rows(problem)
    forced = set(forced_singletons)
    groups: Dict[object, List[Tuple[int, int]]] = {}
    col_groups: List[Tuple[Tuple[int, ...], Optional[Tuple[int, ...]]]] = []
    for w in sorted(problem.integral):
        if w in forced:
            col_groups.append(((w,), (1,)))
            continue
        key, sigma = _oriented_key(problem, w, v_r)
        groups.setdefault(key, []).append((w, sigma))
    for key in sorted(groups, key=lambda k: groups[k][0][0]):
        members = tuple(w for w, _ in groups[key])
        sigmas = tuple(s for _, s in groups[key])
        if all(s == 0 for s in sigmas):
            col_groups.append((members, None))
        else:
            col_groups.append((members, tuple(1 if s == 0 else s for s in sigmas)))
    return InitialPartitionSpec(col_groups=col_groups)


@dataclass
class LinkedPart:
    """One coarse part carrying a T-row: columns, their lambda at detection
    time, and the cancellation vector u with A[:,Q] = S[:,Q] + u * lambda."""

    cols: Tuple[int, ...]
    signs: Tuple[int, ...]
    cancel: Dict[int, Rational]


@dataclass
class AtuLedger:
    """Certificate data kept for fiber construction and audits."""

    mode: NetworkMode
    v_r: frozenset
    linked: List[LinkedPart] = field(default_factory=list)
    free_aggregated: List[Tuple[int, ...]] = field(default_factory=list)
    network_cols: Tuple[int, ...] = ()
    individualized: Tuple[int, ...] = ()

    def sign_of(self, w: int) -> int:
        for lp in self.linked:
            if w in lp.cols:
                return lp.signs[lp.cols.index(w)]
        raise KeyError(w)


def _continuous_components(problem: Problem) -> List[Tuple[List[int], Set[int]]]:
    """Connected components of the continuous-column submatrix, as
    (columns, rows) pairs, ordered by smallest column."""
    cont = [w for w in range(problem.ncols) if w not in problem.integral]
    parent = {w: w for w in cont}

    def find(w):
        while parent[w] != w:
            w = parent[w]
        return w

    row_seen: Dict[int, int] = {}
    for w in cont:
        for v in problem.matrix.cols[w]:
            if v in row_seen:
                ra, rb = find(row_seen[v]), find(w)
                if ra != rb:
                    parent[rb] = ra
            else:
                row_seen[v] = w
    comps: Dict[int, Tuple[List[int], Set[int]]] = {}
    for w in cont:
        root = find(w)
        cols, rows = comps.setdefault(root, ([], set()))
        cols.append(w)
        rows.update(problem.matrix.cols[w])
    return [comps[r] for r in sorted(comps, key=lambda r: comps[r][0][0])]


def _is_ternary_col(col: Dict[int, Rational]) -> bool:
    return all(a in (1, -1) for a in col.values())


def _integral_bounds(problem: Problem, w: int) -> bool:
    for b in (problem.lower[w], problem.upper[w]):
        if is_finite(b) and Fraction(b).denominator != 1:
            return False
    return True


def _integral_delta_override(problem: Problem, w: int) -> Rational:
    lo, hi = problem.lower[w], problem.upper[w]
    if is_finite(lo):
        d = math.ceil(Fraction(lo))
        if d > hi:
            raise ValueError(f"integer column {w} has an empty integral domain")
        return d
    if is_finite(hi):
        return math.floor(Fraction(hi))
    return 0


def detect_milp_reduction(problem: Problem, mode: NetworkMode = NetworkMode.NETWORK
                          ) -> Tuple[BiPartition, AtuLedger, ReflectionReduction]:
    """Run the five-stage detection on a (MI)LP.

    Returns the final partition, the certificate ledger (with the coarse
    pre-individualization linking parts needed by build_fiber), and the
    reflection reduction carrying the reduced MILP.
    """
    eq, n_struct = standard_form(problem)

    odd_integers = sorted(w for w in eq.integral if not _integral_bounds(eq, w))

    # stage 1: fractional rows and network certification of continuous components
    v_r = fractional_rows(eq)
    state = NetworkState(eq.nrows + len(eq.integral), mode)
    network_cols: List[int] = []
    for cols, rows in _continuous_components(eq):
        if rows & v_r:
            v_r |= rows
            continue
        ok = all(_integral_bounds(eq, w) for w in cols) and \
            all(_is_ternary_col(eq.matrix.cols[w]) for w in cols)
        if ok:
            mark = len(state.accepted)
            for w in cols:
                if not augment_network(state, dict(eq.matrix.cols[w])):
                    ok = False
                    del state.accepted[mark:]
                    break
        if ok:
            network_cols.extend(cols)
        else:
            v_r |= rows
    augmented_cols = set(network_cols)

    # stage 2 + 3: masked initial partition, first refinement
    init = milp_initial_partition(eq, v_r, odd_integers)
    delta = compute_delta_center(eq)
    for w in odd_integers:
        delta[w] = _integral_delta_override(eq, w)
    part1 = refine_reflection(eq, init, delta)

    col_groups: List[Tuple[Tuple[int, ...], Optional[Tuple[int, ...]]]] = []
    individualized: List[int] = []

    def individualize(members: Sequence[int], signs: Sequence[int]) -> None:
        for w, s in zip(members, signs):
            col_groups.append(((w,), (s,)))
        individualized.extend(members)

    # bipolar integer columns: keep only with integral center, else split off now
    bipolar_keep: List[Part] = []
    for p in part1.col_parts:
        if p.polarity is not Polarity.BIPOLAR:
            continue
        members_int = [w in eq.integral for w in p.members]
        if not any(members_int):
            col_groups.append((p.members, None))
            continue
        if all(Fraction(delta[w]).denominator == 1 for w in p.members):
            bipolar_keep.append(p)
        else:
            individualize(p.members, [1] * len(p.members))

    # stage 4a: remaining bipolar columns must join the TU matrix
    changed = False
    for p in bipolar_keep:
        kept: List[int] = []
        for w in p.members:
            if w in augmented_cols:
                kept.append(w)
                continue
            col = dict(eq.matrix.cols[w])
            if _is_ternary_col(col) and augment_network(state, col):
                augmented_cols.add(w)
                kept.append(w)
            else:
                individualize([w], [1])
                changed = True
        if kept:
            col_groups.append((tuple(kept), None))
        if len(kept) != len(p.members):
            changed = True

    # stage 4b: integer parts in descending size, T-row only when rows cancel
    ledger = AtuLedger(mode, frozenset(v_r), network_cols=tuple(network_cols))
    int_parts = [p for p in part1.col_parts
                 if p.polarity is Polarity.UNIPOLAR
                 and all(w in eq.integral for w in p.members)]
    int_parts.sort(key=lambda p: (-len(p.members), p.members[0]))
    next_t_row = eq.nrows

    for p in int_parts:
        if len(p.members) < 2:
            col_groups.append((p.members, p.signs))
            continue
        lam = dict(zip(p.members, p.signs))
        cancel: Dict[int, Rational] = {}
        rows_seen: Set[int] = set()
        for w in p.members:
            rows_seen.update(eq.matrix.cols[w])
        reject = False
        for v in sorted(rows_seen):
            row = eq.matrix.rows[v]
            vals = [row.get(w, 0) for w in p.members]
            alpha = normalize(vals[0] * lam[p.members[0]])
            if alpha != 0 and all(vals[i] == alpha * lam[w]
                                  for i, w in enumerate(p.members)):
                # cancel only where needed: fractional rows must vanish for
                # E = RT, nonternary entries cannot sit in S.  A ternary
                # proportional row stays in S, so unit-weight classes come out
                # without a T-row and are never linked in the fiber.
                if v in v_r or alpha not in (1, -1):
                    cancel[v] = alpha
        s_cols: List[Dict[int, Rational]] = []
        for w in p.members:
            s_col: Dict[int, Rational] = {}
            for v in set(eq.matrix.cols[w]) | set(cancel):
                val = normalize(eq.matrix.cols[w].get(v, 0) - cancel.get(v, 0) * lam[w])
                if val:
                    s_col[v] = val
            if any(v in v_r for v in s_col):
                reject = True  # E = RT violated: a fractional row survives
                break
            if not _is_ternary_col(s_col):
                reject = True
                break
            s_cols.append(s_col)
        if not reject:
            t_row = next_t_row if cancel else None
            mark = len(state.accepted)
            for w, s_col in zip(p.members, s_cols):
                cand = dict(s_col)
                if t_row is not None:
                    cand[t_row] = lam[w]
                if not augment_network(state, cand):
                    reject = True
                    del state.accepted[mark:]
                    break
        if reject:
            individualize(p.members, p.signs)
            changed = True
        else:
            col_groups.append((p.members, p.signs))
            if cancel:
                ledger.linked.append(LinkedPart(p.members, p.signs, cancel))
                next_t_row += 1
            else:
                ledger.free_aggregated.append(p.members)

    ledger.individualized = tuple(sorted(individualized))

    # stage 5: re-refine against the individualized partition (same delta)
    for p in part1.col_parts:
        if p.polarity is Polarity.UNIPOLAR and not all(w in eq.integral for w in p.members):
            col_groups.append((p.members, p.signs))
    if changed:
        init2 = InitialPartitionSpec(
            col_groups=col_groups,
            row_groups=[(p.members, p.signs if p.polarity is Polarity.UNIPOLAR else None)
                        for p in part1.row_parts])
        part2 = refine_reflection(eq, init2, delta)
    else:
        part2 = part1

    final_delta = sparsify_delta(part2, delta, eq)
    for w in odd_integers:
        final_delta[w] = delta[w]
    for cp in part2.unipolar_col_parts():
        for w in cp.members:
            if w in eq.integral and Fraction(final_delta[w]).denominator != 1:
                raise AssertionError(f"non-integral delta on integer column {w}")

    reduced = reduce_matrices(eq, part2, final_delta)
    reduction = ReflectionReduction(eq, part2, final_delta, reduced, n_struct)
    return part2, ledger, reduction


@dataclass
class FiberSpec:
    """The fiber polyhedron: the source problem intersected with coarse
    linking equalities and integer singleton fixings."""

    base: Problem
    linking: List[Tuple[Dict[int, int], Rational]] = field(default_factory=list)
    fixes: Dict[int, Rational] = field(default_factory=dict)

    def to_problem(self, objective: Optional[Sequence[Rational]] = None) -> Problem:
        base = self.base
        extra = len(self.linking)
        mat = SparseMatrix(base.nrows + extra, base.ncols)
        for v in range(base.nrows):
            for w, a in base.matrix.rows[v].items():
                mat.set_entry(v, w, a)
        rhs = list(base.rhs)
        names = list(base.row_names)
        for k, (coeffs, d) in enumerate(self.linking):
            for w, s in sorted(coeffs.items()):
                mat.set_entry(base.nrows + k, w, s)
            rhs.append(d)
            names.append(f"link{k+1}")
        lower = list(base.lower)
        upper = list(base.upper)
        for w, val in self.fixes.items():
            if not base.lower[w] <= val <= base.upper[w]:
                raise RuntimeError(
                    f"fiber fixes column {w} to {val} outside its bounds; "
                    f"fiber dump: {self.dump()}")
            lower[w] = upper[w] = val
        return Problem(
            matrix=mat, rhs=rhs, lower=lower, upper=upper,
            objective=list(objective) if objective is not None else list(base.objective),
            row_sense=[RowSense.EQ] * (base.nrows + extra),
            integral=base.integral, objective_offset=base.objective_offset,
            row_names=names, col_names=list(base.col_names),
            name=f"{base.name}_fiber",
        )

    def dump(self) -> str:
        links = "; ".join(
            "+".join(f"{'' if s == 1 else '-'}x{w}" for w, s in sorted(c.items()))
            + f"={d}" for c, d in self.linking)
        fixes = ", ".join(f"x{w}={val}" for w, val in sorted(self.fixes.items()))
        return f"linking[{links}] fixes[{fixes}]"


def build_fiber(reduction: ReflectionReduction, ledger: AtuLedger,
                y: Sequence[Rational]) -> FiberSpec:
    """Fiber for a reduced integral point.

    Linking rows use the coarse pre-individualization parts with their
    detection-time signs; the rhs sums the refined y-values (orientation
    corrected part by part).  Integer unipolar singletons outside the linked
    parts are fixed outright.
    """
    part = reduction.partition
    source = reduction.source
    delta = reduction.delta
    col_parts = part.unipolar_col_parts()
    if len(y) != len(col_parts):
        raise ValueError("reduced point dimension mismatch")
    part_of: Dict[int, int] = {}
    for q, cp in enumerate(col_parts):
        for w in cp.members:
            part_of[w] = q
    for q, cp in enumerate(col_parts):
        if all(w in source.integral for w in cp.members):
            if Fraction(y[q]).denominator != 1:
                raise ValueError(f"fractional value {y[q]} on integer part {cp.members}")

    linked_cols: Set[int] = set()
    fiber = FiberSpec(base=source)
    for lp in ledger.linked:
        linked_cols.update(lp.cols)
        seen: Set[int] = set()
        rhs = 0
        for w, lam1 in zip(lp.cols, lp.signs):
            rhs += lam1 * delta[w]
            q = part_of[w]
            if q not in seen:
                seen.add(q)
                flip = lam1 * col_parts[q].sign_of(w)
                rhs += flip * y[q]
        if Fraction(rhs).denominator != 1:
            raise ValueError("non-integral linking rhs; delta or y violates integrality")
        fiber.linking.append((dict(zip(lp.cols, lp.signs)), normalize(rhs)))

    for q, cp in enumerate(col_parts):
        if len(cp) == 1 and cp.members[0] in source.integral \
                and cp.members[0] not in linked_cols:
            w = cp.members[0]
            fiber.fixes[w] = normalize(cp.signs[0] * y[q] + delta[w])
    return fiber


def recover_integral(fiber: FiberSpec, warm: Sequence[Rational]) -> List[Rational]:
    """Optimal fiber vertex, checked integral on the integer columns and at
    least as good as the warm (lifted, possibly fractional) point."""
    result: LpResult = optimal_vertex_on_fiber(fiber)
    x = result.x
    for w in sorted(fiber.base.integral):
        if Fraction(x[w]).denominator != 1:
            raise RuntimeError(
                f"fiber vertex fractional on integer column {w}: {x[w]}; "
                f"fiber dump: {fiber.dump()}")
    if not fiber.base.is_feasible(x):
        raise RuntimeError(f"fiber vertex infeasible; fiber dump: {fiber.dump()}")
    warm_obj = fiber.base.objective_value(list(warm))
    if result.objective > warm_obj:
        raise RuntimeError("fiber optimum worse than warm point")
    return x


def milp_postsolve(reduction: ReflectionReduction, ledger: AtuLedger,
                   y: Sequence[Rational]) -> List[Rational]:
    """Map a reduced integral point to an original integral point.

    When every integer column sits in a unipolar singleton (or an integrally
    fixed bipolar part), plain lifting is already integral; otherwise the
    fiber LP is solved.
    """
    warm = reduction.lift(y)
    source = reduction.source
    needs_fiber = False
    for cp in reduction.partition.unipolar_col_parts():
        if len(cp) > 1 and any(w in source.integral for w in cp.members):
            needs_fiber = True
            break
    if not needs_fiber:
        return warm
    fiber = build_fiber(reduction, ledger, y)
    return recover_integral(fiber, warm)
