"""Coarsest-equitable-partition engines.

Two modes share one worklist core: plain refinement (permutation case) and
reflection-aware refinement, which simulates a symmetric partition of the
split reformulation while touching only the original matrix.  Signed parts
track the complement signs; bipolar parts represent variable/row pairs whose
positive and negative copies stay together.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import BiPartition, Part, Polarity, Problem, compute_shifted_rhs
from .rationals import (
    Bound,
    NEG_INF,
    POS_INF,
    Rational,
    is_finite,
    normalize,
)

ROWS, COLS = 0, 1


@dataclass
class InitialPartitionSpec:
    """Forced initial groups for refinement.

    Each group is (members, signs): members may only share a part with each
    other, at the given relative orientation.  signs=None leaves the
    orientation free (and permits bipolarity); a signs tuple pins relative
    signs and forces the members unipolar.  Ungrouped elements form the
    default pool, split only by objective/rhs/bound signatures.
    """

    col_groups: List[Tuple[Tuple[int, ...], Optional[Tuple[int, ...]]]] = field(default_factory=list)
    row_groups: List[Tuple[Tuple[int, ...], Optional[Tuple[int, ...]]]] = field(default_factory=list)

    @classmethod
    def empty(cls) -> "InitialPartitionSpec":
        return cls()

    @classmethod
    def integer_singletons(cls, problem: Problem) -> "InitialPartitionSpec":
        return cls(col_groups=[((w,), (1,)) for w in sorted(problem.integral)])

    @classmethod
    def from_bipartition(cls, part: BiPartition) -> "InitialPartitionSpec":
        """Seed a re-refinement from an existing partition (signs preserved)."""
        cols = [(p.members, p.signs if p.polarity is Polarity.UNIPOLAR else None)
                for p in part.col_parts]
        rows = [(p.members, p.signs if p.polarity is Polarity.UNIPOLAR else None)
                for p in part.row_parts]
        return cls(col_groups=cols, row_groups=rows)

    def tokens(self, count: int, side: int) -> List[Tuple[object, int]]:
        """Per-element (group id, orientation) pairs; orientation 0 = free."""
        groups = self.col_groups if side == COLS else self.row_groups
        out: List[Tuple[object, int]] = [(None, 0)] * count
        for gid, (members, signs) in enumerate(groups):
            if signs is not None and len(signs) != len(members):
                raise ValueError("group signs misaligned")
            for i, e in enumerate(members):
                if not 0 <= e < count:
                    raise ValueError(f"group element {e} out of range")
                if out[e][0] is not None:
                    raise ValueError(f"element {e} in two initial groups")
                out[e] = (gid, signs[i] if signs is not None else 0)
        return out


class _EPart:
    __slots__ = ("pid", "side", "members", "bipolar", "pending")

    def __init__(self, pid: int, side: int, bipolar: bool):
        self.pid = pid
        self.side = side
        self.members: Dict[int, int] = {}  # element -> sign (+1 within bipolar parts)
        self.bipolar = bipolar
        self.pending = False


class _Engine:
    """Shared worklist refinement.  In reflect mode bipolar parts are never
    used as splitters (their sums vanish on the split reformulation) and the
    leave-largest-out rule is disabled: a unipolar part stands for a pair of
    parts of the split reformulation and may not be skipped."""

    def __init__(self, problem: Problem, reflect: bool):
        self.matrix = problem.matrix
        self.reflect = reflect
        self.parts: Dict[int, _EPart] = {}
        self.elem_part = [
            [-1] * problem.nrows,
            [-1] * problem.ncols,
        ]
        self.queue: deque = deque()
        self._next_pid = 0

    def new_part(self, side: int, bipolar: bool) -> _EPart:
        p = _EPart(self._next_pid, side, bipolar)
        self._next_pid += 1
        self.parts[p.pid] = p
        return p

    def assign(self, part: _EPart, elem: int, sign: int) -> None:
        part.members[elem] = sign
        self.elem_part[part.side][elem] = part.pid

    def enqueue(self, part: _EPart) -> None:
        if part.bipolar and self.reflect:
            return
        if not part.pending and part.members:
            part.pending = True
            self.queue.append(part.pid)

    def run(self) -> None:
        while self.queue:
            pid = self.queue.popleft()
            part = self.parts.get(pid)
            if part is None or not part.members:
                continue
            part.pending = False
            self._split_opposite(part)

    def _split_opposite(self, splitter: _EPart) -> None:
        sums: Dict[int, Rational] = {}
        if splitter.side == COLS:
            for w, lam in splitter.members.items():
                for v, a in self.matrix.cols[w].items():
                    sums[v] = sums.get(v, 0) + lam * a
        else:
            for v, gam in splitter.members.items():
                for w, a in self.matrix.rows[v].items():
                    sums[w] = sums.get(w, 0) + gam * a

        opp = COLS if splitter.side == ROWS else ROWS
        affected: Dict[int, List[Tuple[int, Rational]]] = {}
        lookup = self.elem_part[opp]
        for e, s in sums.items():
            if s:
                affected.setdefault(lookup[e], []).append((e, s))

        for pid in sorted(affected):
            part = self.parts[pid]
            touched = affected[pid]
            if part.bipolar:
                self._split_bipolar(part, touched)
            else:
                self._split_unipolar(part, touched)

    def _split_bipolar(self, part: _EPart, touched: List[Tuple[int, Rational]]) -> None:
        # Nonzero sums force the +/- copies apart: fragments of equal |sum|
        # become unipolar pairs with signs making the sums positive.
        groups: Dict[Rational, List[Tuple[int, int]]] = {}
        for e, s in touched:
            key = -s if s < 0 else s
            groups.setdefault(key, []).append((e, 1 if s > 0 else -1))
        for key in sorted(groups):
            frag = self.new_part(part.side, bipolar=False)
            for e, sign in groups[key]:
                del part.members[e]
                self.assign(frag, e, sign)
            self.enqueue(frag)
        # residual (zero sums and untouched members) stays bipolar, never enqueued

    def _split_unipolar(self, part: _EPart, touched: List[Tuple[int, Rational]]) -> None:
        groups: Dict[Rational, List[int]] = {}
        for e, s in touched:
            groups.setdefault(part.members[e] * s, []).append(e)
        residual = len(part.members) - len(touched)
        if residual == 0 and len(groups) == 1:
            return  # uniform nonzero sums: no split
        was_pending = part.pending
        fragments: List[_EPart] = []
        keys = sorted(groups)
        if residual == 0:
            keys.pop(0)  # reuse the part object for the first group
        for key in keys:
            frag = self.new_part(part.side, bipolar=False)
            for e in groups[key]:
                sign = part.members.pop(e)
                self.assign(frag, e, sign)
            fragments.append(frag)
        if self.reflect:
            self.enqueue(part)
            for frag in fragments:
                self.enqueue(frag)
            return
        if was_pending:
            for frag in fragments:
                self.enqueue(frag)
            return
        everyone = [part] + fragments
        largest = max(range(len(everyone)), key=lambda i: len(everyone[i].members))
        for i, frag in enumerate(everyone):
            if i != largest:
                self.enqueue(frag)

    def to_bipartition(self, nrows: int, ncols: int) -> BiPartition:
        rows: List[Part] = []
        cols: List[Part] = []
        for pid in sorted(self.parts):
            p = self.parts[pid]
            if not p.members:
                continue
            members = tuple(sorted(p.members))
            if p.bipolar:
                part = Part(members, Polarity.BIPOLAR, None)
            else:
                part = Part(members, Polarity.UNIPOLAR,
                            tuple(p.members[e] for e in members))
            (rows if p.side == ROWS else cols).append(part)
        return BiPartition(nrows, ncols, tuple(rows), tuple(cols))


def _grouped_parts(engine: _Engine, side: int,
                   keyed: List[Tuple[object, int, int]]) -> None:
    """keyed: (key, element, sign); bipolar groups flagged by sign == 0."""
    by_key: Dict[object, _EPart] = {}
    for key, elem, sign in keyed:
        part = by_key.get(key)
        if part is None:
            part = engine.new_part(side, bipolar=(sign == 0))
            by_key[key] = part
        engine.assign(part, elem, sign if sign else 1)
    for part in by_key.values():
        engine.enqueue(part)


def refine_plain(problem: Problem, init: InitialPartitionSpec) -> BiPartition:
    """Coarsest equitable partition of (A, b; l, u, c) refining the initial
    spec.  All parts come out unipolar with +1 signs."""
    engine = _Engine(problem, reflect=False)
    row_tokens = init.tokens(problem.nrows, ROWS)
    col_tokens = init.tokens(problem.ncols, COLS)
    _grouped_parts(engine, ROWS,
                   [((problem.rhs[v], row_tokens[v][0]), v, 1)
                    for v in range(problem.nrows)])
    _grouped_parts(engine, COLS,
                   [((problem.objective[w], problem.lower[w], problem.upper[w],
                      col_tokens[w][0]), w, 1)
                    for w in range(problem.ncols)])
    engine.run()
    return engine.to_bipartition(problem.nrows, problem.ncols)


def _oriented_col_key(c: Rational, lo: Bound, hi: Bound,
                      gid: object, sigma: int) -> Tuple[object, int]:
    """Canonical (key, lambda) for a unipolar column of the shifted problem.

    The key must coincide for two columns exactly when one can be mapped onto
    the other by an optional complement: flipping negates the objective and
    swaps the (upper, complement-upper) bound pair.
    """
    if c > 0:
        lam = 1
    elif c < 0:
        lam = -1
    else:
        fwd = (hi, -lo)
        rev = (-lo, hi)
        if fwd > rev:
            lam = 1
        elif fwd < rev:
            lam = -1
        else:
            lam = sigma  # symmetric data: only a forced orientation keeps it unipolar
    pair = (hi, -lo) if lam == 1 else (-lo, hi)
    return ("U", lam * c, pair, gid, lam * sigma), lam


def refine_reflection(problem: Problem, init: InitialPartitionSpec,
                      delta: Sequence[Rational]) -> BiPartition:
    """Reflection-aware refinement on the delta-shifted problem.

    The result, read as unipolar pairs plus bipolar blocks, is the coarsest
    bound-respecting symmetric equitable partition of the split reformulation
    of F(A, b - A*delta, l - delta, u - delta, c).  Signs are canonicalized
    before returning.
    """
    if any(s.value != "E" for s in problem.row_sense):
        raise ValueError("refine_reflection expects an equality-form problem")
    if len(delta) != problem.ncols:
        raise ValueError("delta dimension mismatch")
    shifted_b = compute_shifted_rhs(problem, delta)
    lo_s: List[Bound] = []
    hi_s: List[Bound] = []
    for w in range(problem.ncols):
        lo = problem.lower[w] - delta[w] if is_finite(problem.lower[w]) else NEG_INF
        hi = problem.upper[w] - delta[w] if is_finite(problem.upper[w]) else POS_INF
        if lo > 0 or hi < 0:
            raise ValueError(f"split reformulation undefined: delta[{w}] outside bounds")
        lo_s.append(normalize(lo) if is_finite(lo) else lo)
        hi_s.append(normalize(hi) if is_finite(hi) else hi)

    engine = _Engine(problem, reflect=True)
    row_tokens = init.tokens(problem.nrows, ROWS)
    col_tokens = init.tokens(problem.ncols, COLS)

    row_keys: List[Tuple[object, int, int]] = []
    for v in range(problem.nrows):
        gid, sigma = row_tokens[v]
        bv = shifted_b[v]
        if bv == 0 and sigma == 0:
            row_keys.append((("B", gid), v, 0))
        else:
            if bv > 0:
                gam = 1
            elif bv < 0:
                gam = -1
            else:
                gam = sigma
            mag = -bv if bv < 0 else bv
            row_keys.append((("U", mag, gid, gam * sigma), v, gam))
    _grouped_parts(engine, ROWS, row_keys)

    col_keys: List[Tuple[object, int, int]] = []
    for w in range(problem.ncols):
        gid, sigma = col_tokens[w]
        c = problem.objective[w]
        lo, hi = lo_s[w], hi_s[w]
        if c == 0 and -lo == hi and sigma == 0:
            col_keys.append((("B", gid, hi), w, 0))
        else:
            key, lam = _oriented_col_key(c, lo, hi, gid, sigma)
            col_keys.append((key, w, lam))
    _grouped_parts(engine, COLS, col_keys)

    engine.run()
    return canonicalize_signs(engine.to_bipartition(problem.nrows, problem.ncols))


def canonicalize_signs(part: BiPartition) -> BiPartition:
    """Flip each unipolar pair so at least half its elements carry +1;
    on a tie the smallest element gets +1."""

    def fix(p: Part) -> Part:
        if p.polarity is Polarity.BIPOLAR:
            return p
        plus = sum(1 for s in p.signs if s == 1)
        flip = plus * 2 < len(p.signs) or (plus * 2 == len(p.signs) and p.signs[0] == -1)
        if not flip:
            return p
        return Part(p.members, Polarity.UNIPOLAR, tuple(-s for s in p.signs))

    return BiPartition(
        part.nrows, part.ncols,
        tuple(fix(p) for p in part.row_parts),
        tuple(fix(p) for p in part.col_parts),
    )


def compute_delta_center(problem: Problem) -> List[Rational]:
    """Domain-centering offset: midpoint for boxes, the finite bound for
    half-open domains, 0 for free variables."""
    delta: List[Rational] = []
    for w in range(problem.ncols):
        lo, hi = problem.lower[w], problem.upper[w]
        if is_finite(lo) and is_finite(hi):
            delta.append(normalize(Fraction(lo + hi, 2)))
        elif is_finite(lo):
            delta.append(normalize(lo))
        elif is_finite(hi):
            delta.append(normalize(hi))
        else:
            delta.append(0)
    return delta


def _snap_delta(problem: Problem, w: int, lam: int) -> Rational:
    lo, hi = problem.lower[w], problem.upper[w]
    if is_finite(lo) and is_finite(hi):
        return normalize(lo if lam == 1 else hi)
    if is_finite(lo):
        return normalize(lo)
    if is_finite(hi):
        return normalize(hi)
    return 0


def sparsify_delta(part: BiPartition, delta_c: Sequence[Rational],
                   problem: Problem) -> List[Rational]:
    """Snap unipolar columns to their bounds and shift each part by the most
    frequent snap value so most entries cancel to zero.

    The partition computed under delta_c remains valid for the returned
    offset.  A shift candidate is only used if it keeps every member inside
    its box (the equivalence theorem assumes l <= delta <= u); otherwise the
    plain snapped offset is kept.
    """
    delta = [normalize(d) for d in delta_c]
    for cp in part.unipolar_col_parts():
        snapped = [_snap_delta(problem, w, lam) for w, lam in zip(cp.members, cp.signs)]
        values = [lam * s for lam, s in zip(cp.signs, snapped)]
        counts: Dict[Rational, int] = {}
        order: List[Rational] = []
        for v in values:
            if v not in counts:
                order.append(v)
            counts[v] = counts.get(v, 0) + 1
        nu = 0
        for cand in sorted(order, key=lambda v: (-counts[v], order.index(v))):
            ok = True
            for w, lam, s in zip(cp.members, cp.signs, snapped):
                d = s + lam * -cand
                if not problem.lower[w] <= d <= problem.upper[w]:
                    ok = False
                    break
            if ok:
                nu = -cand
                break
        for w, lam, s in zip(cp.members, cp.signs, snapped):
            delta[w] = normalize(s + lam * nu)
    return delta


def partition_col_lists(part: BiPartition) -> List[List[int]]:
    return [list(p.members) for p in part.col_parts]


def partition_row_lists(part: BiPartition) -> List[List[int]]:
    return [list(p.members) for p in part.row_parts]


def is_equitable_plain(matrix, row_parts: Sequence[Sequence[int]],
                       col_parts: Sequence[Sequence[int]]) -> bool:
    """Direct check of the block row-sum / column-sum conditions."""
    for rp in row_parts:
        for cp in col_parts:
            row_sums = [normalize(sum(matrix.rows[v].get(w, 0) for w in cp)) for v in rp]
            if len(set(row_sums)) > 1:
                return False
            col_sums = [normalize(sum(matrix.cols[w].get(v, 0) for v in rp)) for w in cp]
            if len(set(col_sums)) > 1:
                return False
    return True


def same_structure(a: BiPartition, b: BiPartition) -> bool:
    """Equal parts, polarities and signs up to canonicalization."""
    return canonicalize_signs(a) == canonicalize_signs(b)
