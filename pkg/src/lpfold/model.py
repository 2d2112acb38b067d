"""Core problem model: sparse rational matrices, standard-form (MI)LPs,
signed bi-partitions and the folding / reflection-reduction maps."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .rationals import (
    Bound,
    NEG_INF,
    POS_INF,
    Rational,
    is_finite,
    normalize,
)


class RowSense(enum.Enum):
    EQ = "E"
    LE = "L"
    GE = "G"


class Polarity(enum.Enum):
    UNIPOLAR = "U"
    BIPOLAR = "B"


class SparseMatrix:
    """Sparse rational matrix with synchronized row-major and column-major views.

    No explicit zeros are stored; duplicate coordinates are rejected.
    """

    __slots__ = ("nrows", "ncols", "rows", "cols")

    def __init__(self, nrows: int, ncols: int):
        self.nrows = nrows
        self.ncols = ncols
        self.rows: List[Dict[int, Rational]] = [{} for _ in range(nrows)]
        self.cols: List[Dict[int, Rational]] = [{} for _ in range(ncols)]

    @classmethod
    def from_entries(cls, nrows: int, ncols: int,
                     entries: Iterable[Tuple[int, int, Rational]]) -> "SparseMatrix":
        m = cls(nrows, ncols)
        for r, c, v in entries:
            m.set_entry(r, c, v)
        return m

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[Rational]]) -> "SparseMatrix":
        nrows = len(dense)
        ncols = len(dense[0]) if nrows else 0
        m = cls(nrows, ncols)
        for r, row in enumerate(dense):
            if len(row) != ncols:
                raise ValueError("ragged dense matrix")
            for c, v in enumerate(row):
                if v:
                    m.set_entry(r, c, v)
        return m

    def set_entry(self, r: int, c: int, v: Rational) -> None:
        if not (0 <= r < self.nrows and 0 <= c < self.ncols):
            raise IndexError(f"entry ({r},{c}) out of range")
        if c in self.rows[r]:
            raise ValueError(f"duplicate entry at ({r},{c})")
        v = normalize(v)
        if v == 0:
            return
        self.rows[r][c] = v
        self.cols[c][r] = v

    def entry(self, r: int, c: int) -> Rational:
        if not (0 <= r < self.nrows and 0 <= c < self.ncols):
            raise IndexError(f"entry ({r},{c}) out of range")
        return self.rows[r].get(c, 0)

    def row(self, r: int) -> Dict[int, Rational]:
        return self.rows[r]

    def col(self, c: int) -> Dict[int, Rational]:
        return self.cols[c]

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def transpose(self) -> "SparseMatrix":
        t = SparseMatrix(self.ncols, self.nrows)
        for r, row in enumerate(self.rows):
            for c, v in row.items():
                t.rows[c][r] = v
                t.cols[r][c] = v
        return t

    def to_dense(self) -> List[List[Rational]]:
        return [[self.rows[r].get(c, 0) for c in range(self.ncols)]
                for r in range(self.nrows)]

    def __eq__(self, other) -> bool:
        return (isinstance(other, SparseMatrix)
                and self.nrows == other.nrows and self.ncols == other.ncols
                and self.rows == other.rows)

    def __repr__(self) -> str:
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


@dataclass
class Problem:
    """Standard-form problem min c'x s.t. rows (EQ/LE/GE) and l <= x <= u,
    with integrality marks and an explicit objective offset."""

    matrix: SparseMatrix
    rhs: List[Rational]
    lower: List[Bound]
    upper: List[Bound]
    objective: List[Rational]
    row_sense: List[RowSense] = field(default_factory=list)
    integral: frozenset = frozenset()
    objective_offset: Rational = 0
    row_names: List[str] = field(default_factory=list)
    col_names: List[str] = field(default_factory=list)
    name: str = "problem"

    def __post_init__(self):
        m, n = self.matrix.nrows, self.matrix.ncols
        if not self.row_sense:
            self.row_sense = [RowSense.EQ] * m
        if not self.row_names:
            self.row_names = [f"r{i+1}" for i in range(m)]
        if not self.col_names:
            self.col_names = [f"x{j+1}" for j in range(n)]
        if not (len(self.rhs) == len(self.row_sense) == len(self.row_names) == m):
            raise ValueError("row data dimensions inconsistent")
        if not (len(self.lower) == len(self.upper) == len(self.objective)
                == len(self.col_names) == n):
            raise ValueError("column data dimensions inconsistent")
        self.integral = frozenset(self.integral)
        if any(not 0 <= w < n for w in self.integral):
            raise ValueError("integral marks out of range")
        for w in range(n):
            if self.lower[w] == POS_INF or self.upper[w] == NEG_INF:
                raise ValueError(f"illegal infinite bound on column {w}")
            if self.lower[w] > self.upper[w]:
                raise ValueError(f"empty domain on column {w}")

    @property
    def nrows(self) -> int:
        return self.matrix.nrows

    @property
    def ncols(self) -> int:
        return self.matrix.ncols

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def is_pure_lp(self) -> bool:
        return not self.integral

    def objective_value(self, x: Sequence[Rational]) -> Rational:
        total = self.objective_offset
        for w, c in enumerate(self.objective):
            if c:
                total += c * x[w]
        return normalize(total)

    def row_activity(self, v: int, x: Sequence[Rational]) -> Rational:
        return normalize(sum(a * x[w] for w, a in self.matrix.rows[v].items()))

    def is_feasible(self, x: Sequence[Rational]) -> bool:
        if len(x) != self.ncols:
            raise ValueError("point dimension mismatch")
        for w in range(self.ncols):
            if not self.lower[w] <= x[w] <= self.upper[w]:
                return False
        for v in range(self.nrows):
            act = self.row_activity(v, x)
            sense = self.row_sense[v]
            if sense is RowSense.EQ and act != self.rhs[v]:
                return False
            if sense is RowSense.LE and act > self.rhs[v]:
                return False
            if sense is RowSense.GE and act < self.rhs[v]:
                return False
        return True


def standard_form(problem: Problem) -> Tuple[Problem, int]:
    """Equality form used by refinement: GE rows are negated, every inequality
    row gets a fresh continuous slack column bounded [0, inf).

    Returns the equality problem and the structural column count (slack columns
    sit behind the structural ones).  Deterministic, so postsolve can rebuild it
    from the original instance alone.
    """
    m, n = problem.nrows, problem.ncols
    slack_rows = [v for v in range(m) if problem.row_sense[v] is not RowSense.EQ]
    mat = SparseMatrix(m, n + len(slack_rows))
    rhs = list(problem.rhs)
    for v in range(m):
        neg = problem.row_sense[v] is RowSense.GE
        if neg:
            rhs[v] = normalize(-rhs[v])
        for w, a in problem.matrix.rows[v].items():
            mat.set_entry(v, w, -a if neg else a)
    lower = list(problem.lower)
    upper = list(problem.upper)
    obj = list(problem.objective)
    names = list(problem.col_names)
    for k, v in enumerate(slack_rows):
        mat.set_entry(v, n + k, 1)
        lower.append(0)
        upper.append(POS_INF)
        obj.append(0)
        names.append(f"{problem.row_names[v]}__slk")
    eq = Problem(
        matrix=mat, rhs=rhs, lower=lower, upper=upper, objective=obj,
        row_sense=[RowSense.EQ] * m, integral=problem.integral,
        objective_offset=problem.objective_offset,
        row_names=list(problem.row_names), col_names=names,
        name=problem.name,
    )
    return eq, n


@dataclass(frozen=True)
class Part:
    """One part of a row or column partition.

    Unipolar parts carry one sign per member (the gamma / lambda entries);
    bipolar parts carry none."""

    members: Tuple[int, ...]
    polarity: Polarity = Polarity.UNIPOLAR
    signs: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("empty part")
        if self.polarity is Polarity.UNIPOLAR:
            signs = self.signs if self.signs is not None else (1,) * len(self.members)
            if len(signs) != len(self.members) or any(s not in (1, -1) for s in signs):
                raise ValueError("bad signs")
            order = sorted(range(len(self.members)), key=lambda i: self.members[i])
            object.__setattr__(self, "members", tuple(self.members[i] for i in order))
            object.__setattr__(self, "signs", tuple(signs[i] for i in order))
        else:
            if self.signs is not None:
                raise ValueError("bipolar parts carry no signs")
            object.__setattr__(self, "members", tuple(sorted(self.members)))

    def sign_of(self, elem: int) -> int:
        return self.signs[self.members.index(elem)]

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class BiPartition:
    """Row and column partition with per-part polarity and per-element signs.

    Parts are kept in canonical order (ascending smallest member); members are
    sorted inside each part, so equal partitions compare equal structurally."""

    nrows: int
    ncols: int
    row_parts: Tuple[Part, ...]
    col_parts: Tuple[Part, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_parts",
                           tuple(sorted(self.row_parts, key=lambda p: p.members[0])))
        object.__setattr__(self, "col_parts",
                           tuple(sorted(self.col_parts, key=lambda p: p.members[0])))
        for parts, count, kind in ((self.row_parts, self.nrows, "row"),
                                   (self.col_parts, self.ncols, "col")):
            seen = set()
            for p in parts:
                for e in p.members:
                    if not 0 <= e < count:
                        raise ValueError(f"{kind} id {e} out of range")
                    if e in seen:
                        raise ValueError(f"{kind} id {e} covered twice")
                    seen.add(e)
            if len(seen) != count:
                raise ValueError(f"{kind} partition does not cover all elements")

    @classmethod
    def identity(cls, nrows: int, ncols: int) -> "BiPartition":
        return cls(
            nrows, ncols,
            tuple(Part((v,)) for v in range(nrows)),
            tuple(Part((w,)) for w in range(ncols)),
        )

    def unipolar_row_parts(self) -> List[Part]:
        return [p for p in self.row_parts if p.polarity is Polarity.UNIPOLAR]

    def unipolar_col_parts(self) -> List[Part]:
        return [p for p in self.col_parts if p.polarity is Polarity.UNIPOLAR]

    def bipolar_cols(self) -> List[int]:
        out: List[int] = []
        for p in self.col_parts:
            if p.polarity is Polarity.BIPOLAR:
                out.extend(p.members)
        return sorted(out)

    def bipolar_rows(self) -> List[int]:
        out: List[int] = []
        for p in self.row_parts:
            if p.polarity is Polarity.BIPOLAR:
                out.extend(p.members)
        return sorted(out)

    def col_sign(self, w: int) -> int:
        for p in self.col_parts:
            if w in p.members:
                return 1 if p.polarity is Polarity.BIPOLAR else p.sign_of(w)
        raise KeyError(w)

    def is_plain(self) -> bool:
        """True when the partition is a pure permutation partition."""
        for p in list(self.row_parts) + list(self.col_parts):
            if p.polarity is Polarity.BIPOLAR or any(s != 1 for s in p.signs):
                return False
        return True


def apply_row_partition_sum(part: Sequence[int], col: int, matrix: SparseMatrix,
                            signs: Optional[Sequence[int]] = None) -> Rational:
    """Signed column sum over a row part: sum of gamma_v * A[v, col]."""
    if not part:
        raise ValueError("empty part")
    if not 0 <= col < matrix.ncols:
        raise IndexError(f"column {col} out of range")
    column = matrix.cols[col]
    total = 0
    for i, v in enumerate(part):
        if not 0 <= v < matrix.nrows:
            raise IndexError(f"row {v} out of range")
        a = column.get(v)
        if a is not None:
            total += (signs[i] if signs is not None else 1) * a
    return normalize(total)


def compute_shifted_rhs(problem: Problem, delta: Sequence[Rational]) -> List[Rational]:
    """b - A*delta, computed once (column-wise over the sparse view)."""
    shifted = list(problem.rhs)
    for w, d in enumerate(delta):
        if d:
            for v, a in problem.matrix.cols[w].items():
                shifted[v] -= a * d
    return [normalize(x) for x in shifted]


def _complemented_bounds(problem: Problem, part: Part,
                         delta: Sequence[Rational]) -> Tuple[Bound, Bound]:
    """Summed reduced bounds of one unipolar column part under (lambda, delta)."""
    lo_total: Bound = 0
    hi_total: Bound = 0
    for w, lam in zip(part.members, part.signs):
        if lam == 1:
            lo = problem.lower[w] - delta[w] if is_finite(problem.lower[w]) else NEG_INF
            hi = problem.upper[w] - delta[w] if is_finite(problem.upper[w]) else POS_INF
        else:
            lo = delta[w] - problem.upper[w] if is_finite(problem.upper[w]) else NEG_INF
            hi = delta[w] - problem.lower[w] if is_finite(problem.lower[w]) else POS_INF
        lo_total = NEG_INF if lo == NEG_INF or lo_total == NEG_INF else normalize(lo_total + lo)
        hi_total = POS_INF if hi == POS_INF or hi_total == POS_INF else normalize(hi_total + hi)
    return lo_total, hi_total


def _part_name(names: Sequence[str], part: Part) -> str:
    return names[part.members[0]]


def reduce_matrices(problem: Problem, part: BiPartition,
                    delta: Sequence[Rational]) -> Problem:
    """Build the reduced problem of a reflection reduction.

    One reduced row per unipolar row part, one reduced column per unipolar
    column part; bipolar rows and columns are dropped (bipolar columns are
    fixed to delta on lifting).  Degenerates to plain folding when all signs
    are +1, there are no bipolar parts and delta = 0; in that degenerate case
    the l <= delta <= u precondition is waived (plain folding needs none).
    """
    if any(s is not RowSense.EQ for s in problem.row_sense):
        raise ValueError("reduce_matrices expects an equality-form problem")
    if part.nrows != problem.nrows or part.ncols != problem.ncols:
        raise ValueError("partition does not match problem dimensions")
    if len(delta) != problem.ncols:
        raise ValueError("delta dimension mismatch")
    plain = part.is_plain() and all(d == 0 for d in delta)
    if not plain:
        for w in range(problem.ncols):
            if not problem.lower[w] <= delta[w] <= problem.upper[w]:
                raise ValueError(f"delta[{w}] outside variable bounds")

    shifted = compute_shifted_rhs(problem, delta)
    row_parts = part.unipolar_row_parts()
    col_parts = part.unipolar_col_parts()
    col_index = {}
    for q, p in enumerate(col_parts):
        for w in p.members:
            col_index[w] = q

    mat = SparseMatrix(len(row_parts), len(col_parts))
    rhs: List[Rational] = []
    for pi, rp in enumerate(row_parts):
        acc: Dict[int, Rational] = {}
        b_val = 0
        for v, gam in zip(rp.members, rp.signs):
            b_val += gam * shifted[v]
            for w, a in problem.matrix.rows[v].items():
                q = col_index.get(w)
                if q is None:
                    continue  # bipolar column: zero sums guaranteed, dropped
                lam = col_parts[q].sign_of(w)
                acc[q] = acc.get(q, 0) + gam * a * lam
        for q in sorted(acc):
            size = len(col_parts[q])
            val = normalize(Fraction(acc[q], size) if size > 1 else acc[q])
            if val:
                mat.set_entry(pi, q, val)
        rhs.append(normalize(b_val))

    lower: List[Bound] = []
    upper: List[Bound] = []
    obj: List[Rational] = []
    integral = set()
    col_names: List[str] = []
    for q, cp in enumerate(col_parts):
        lo, hi = _complemented_bounds(problem, cp, delta)
        lower.append(lo)
        upper.append(hi)
        csum = sum(lam * problem.objective[w] for w, lam in zip(cp.members, cp.signs))
        obj.append(normalize(Fraction(csum, len(cp))))
        members_integral = [w in problem.integral for w in cp.members]
        if all(members_integral):
            integral.add(q)
        elif any(members_integral):
            raise ValueError(f"column part {cp.members} mixes integer and continuous")
        col_names.append(_part_name(problem.col_names, cp))

    offset = problem.objective_offset
    offset += sum(problem.objective[w] * delta[w]
                  for w in range(problem.ncols) if problem.objective[w] and delta[w])

    return Problem(
        matrix=mat, rhs=rhs, lower=lower, upper=upper, objective=obj,
        row_sense=[RowSense.EQ] * len(row_parts), integral=frozenset(integral),
        objective_offset=normalize(offset),
        row_names=[_part_name(problem.row_names, rp) for rp in row_parts],
        col_names=col_names, name=f"{problem.name}_red",
    )


def lift_solution(y: Sequence[Rational], part: BiPartition,
                  delta: Sequence[Rational]) -> List[Rational]:
    """Map a reduced point back: x_w = lambda_w * y_Q / |Q| + delta_w on unipolar
    columns, x_w = delta_w on bipolar columns."""
    col_parts = part.unipolar_col_parts()
    if len(y) != len(col_parts):
        raise ValueError("reduced point dimension mismatch")
    x: List[Rational] = [normalize(d) for d in delta]
    for q, cp in enumerate(col_parts):
        size = len(cp)
        for w, lam in zip(cp.members, cp.signs):
            x[w] = normalize(delta[w] + Fraction(lam * y[q], size))
    return x


def project_solution(x: Sequence[Rational], part: BiPartition,
                     delta: Sequence[Rational]) -> List[Rational]:
    """Map an original point down: y_Q = sum of lambda_w * (x_w - delta_w)."""
    if len(x) != part.ncols:
        raise ValueError("original point dimension mismatch")
    out: List[Rational] = []
    for cp in part.unipolar_col_parts():
        out.append(normalize(sum(lam * (x[w] - delta[w])
                                 for w, lam in zip(cp.members, cp.signs))))
    return out


@dataclass
class ReflectionReduction:
    """A computed reduction: partition plus offsets plus the derived problem.

    ``source`` is the equality-form problem the partition lives on; the first
    ``n_structural`` of its columns are the user's variables, the rest are
    internal slack columns added by standard_form."""

    source: Problem
    partition: BiPartition
    delta: List[Rational]
    reduced: Problem
    n_structural: int

    def lift(self, y: Sequence[Rational]) -> List[Rational]:
        return lift_solution(y, self.partition, self.delta)

    def project(self, x: Sequence[Rational]) -> List[Rational]:
        return project_solution(x, self.partition, self.delta)

    def lift_structural(self, y: Sequence[Rational]) -> List[Rational]:
        return self.lift(y)[: self.n_structural]
