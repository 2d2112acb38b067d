"""Incremental recognition of (transposed) network matrices, plus a
brute-force total-unimodularity oracle for testing.

A ternary matrix is a network matrix when its columns are signed tree paths
over the rows (tree edges).  Augmentation re-realizes the accepted set plus
the candidate from scratch with a complete backtracking search: the only
branch points are each column's path order (vertex gluings are then forced,
with a union-find cycle check keeping the tree acyclic), so acceptance is
sound and complete for the attempted order.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import SparseMatrix
from .rationals import Rational, normalize


class NetworkMode(enum.Enum):
    NETWORK = "network"
    TRANSPOSED = "transposed"


class _UndoDsu:
    """Union-find without path compression so unions can be rolled back."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.trail: List[Tuple[int, int]] = []

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        bumped = self.rank[ra] == self.rank[rb]
        self.trail.append((rb, ra, bumped))
        self.parent[rb] = ra
        if bumped:
            self.rank[ra] += 1
        return True

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            rb, ra, bumped = self.trail.pop()
            self.parent[rb] = rb
            if bumped:
                self.rank[ra] -= 1


class _Realizer:
    """Search for a tree realization of signed path columns.

    Row r owns endpoint slots 2r (tail) and 2r+1 (head); a +1 entry means the
    path traverses tail -> head.  Gluing identifies an exit slot with the next
    entry slot; the connectivity DSU (edges pre-joined) rejects gluings that
    would close a cycle among tree edges.
    """

    def __init__(self, nrows: int, columns: Sequence[Dict[int, int]]):
        self.columns = columns
        self.vert = _UndoDsu(2 * nrows)
        self.conn = _UndoDsu(2 * nrows)
        for r in range(nrows):
            self.conn.union(2 * r, 2 * r + 1)

    @staticmethod
    def _entry_exit(row: int, sign: int) -> Tuple[int, int]:
        tail, head = 2 * row, 2 * row + 1
        return (tail, head) if sign == 1 else (head, tail)

    def _glue(self, a: int, b: int) -> bool:
        if self.vert.find(a) == self.vert.find(b):
            return True
        if self.conn.find(a) == self.conn.find(b):
            return False  # would close a cycle
        self.vert.union(a, b)
        self.conn.union(a, b)
        return True

    def _extend(self, column: Dict[int, int], placed: List[int],
                remaining: List[int], col_index: int) -> bool:
        if not remaining:
            return self._realize_from(col_index + 1)
        _, prev_exit = self._entry_exit(placed[-1], column[placed[-1]])
        for i, row in enumerate(remaining):
            entry, _ = self._entry_exit(row, column[row])
            mv, mc = self.vert.mark(), self.conn.mark()
            if self._glue(prev_exit, entry):
                placed.append(row)
                rest = remaining[:i] + remaining[i + 1:]
                if self._extend(column, placed, rest, col_index):
                    return True
                placed.pop()
            self.vert.undo(mv)
            self.conn.undo(mc)
        return False

    def _realize_from(self, col_index: int) -> bool:
        if col_index == len(self.columns):
            return True
        column = self.columns[col_index]
        support = sorted(column)
        if len(support) <= 1:
            return self._realize_from(col_index + 1)
        for i, first in enumerate(support):
            rest = support[:i] + support[i + 1:]
            if self._extend(column, [first], rest, col_index):
                return True
        return False

    def run(self) -> bool:
        return self._realize_from(0)


def realizable_as_network(nrows: int, columns: Sequence[Dict[int, int]]) -> bool:
    return _Realizer(nrows, columns).run()


class NetworkState:
    """Certified growing column set of a (transposed) network matrix."""

    def __init__(self, nrows: int, mode: NetworkMode = NetworkMode.NETWORK):
        if nrows < 0:
            raise ValueError("negative row count")
        self.nrows = nrows
        self.mode = mode
        self.accepted: List[Dict[int, int]] = []

    @property
    def ncols(self) -> int:
        return len(self.accepted)

    def clone(self) -> "NetworkState":
        other = NetworkState(self.nrows, self.mode)
        other.accepted = list(self.accepted)
        return other

    def matrix(self) -> SparseMatrix:
        m = SparseMatrix(self.nrows, self.ncols)
        for c, col in enumerate(self.accepted):
            for r, v in col.items():
                m.set_entry(r, c, v)
        return m


def _as_column(state: NetworkState, column) -> Dict[int, int]:
    if isinstance(column, dict):
        items = column.items()
    else:
        if len(column) != state.nrows:
            raise ValueError("column length does not match state row count")
        items = [(r, v) for r, v in enumerate(column) if v]
    out: Dict[int, int] = {}
    for r, v in items:
        if not 0 <= r < state.nrows:
            raise ValueError(f"row id {r} out of range")
        if v == 0:
            continue
        if v not in (1, -1):
            raise ValueError(f"non-ternary entry {v} at row {r}")
        out[r] = v
    return out


def augment_network(state: NetworkState, column) -> bool:
    """Try to certify [M | column]; accepts sparse dicts or dense sequences.

    On success the state grows; on rejection it is unchanged.
    """
    col = _as_column(state, column)
    candidate = state.accepted + [col]
    if state.mode is NetworkMode.NETWORK:
        ok = realizable_as_network(state.nrows, candidate)
    else:
        rows: List[Dict[int, int]] = [dict() for _ in range(state.nrows)]
        for c, cdict in enumerate(candidate):
            for r, v in cdict.items():
                rows[r][c] = v
        ok = realizable_as_network(len(candidate), [r for r in rows if r])
    if ok:
        state.accepted.append(col)
    return ok


@dataclass
class TuVerdict:
    is_tu: bool
    witness: Optional[Tuple[Tuple[int, ...], Tuple[int, ...], Rational]] = None

    def __post_init__(self):
        if self.is_tu and self.witness is not None:
            raise ValueError("witness only accompanies a negative verdict")
        if not self.is_tu and self.witness is None:
            raise ValueError("negative verdict requires a witness")


def _det_exact(dense: List[List[Rational]], rows: Sequence[int],
               cols: Sequence[int]) -> Rational:
    n = len(rows)
    a = [[Fraction(dense[r][c]) for c in cols] for r in rows]
    det = Fraction(1)
    for k in range(n):
        pivot = None
        for i in range(k, n):
            if a[i][k]:
                pivot = i
                break
        if pivot is None:
            return 0
        if pivot != k:
            a[k], a[pivot] = a[pivot], a[k]
            det = -det
        det *= a[k][k]
        inv = 1 / a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] * inv
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return normalize(det)


def tu_bruteforce(matrix: SparseMatrix, max_order: Optional[int] = None) -> TuVerdict:
    """Check every square submatrix up to max_order with exact determinants.

    Exponential; intended for desk-size matrices (<= 8x8 recommended).
    """
    limit = min(matrix.nrows, matrix.ncols)
    if max_order is not None:
        limit = min(limit, max_order)
    dense = matrix.to_dense()
    for order in range(1, limit + 1):
        for rows in itertools.combinations(range(matrix.nrows), order):
            if order > 1 and all(not dense[r][c] for r in rows
                                 for c in range(matrix.ncols)):
                continue
            for cols in itertools.combinations(range(matrix.ncols), order):
                det = _det_exact(dense, rows, cols)
                if det not in (0, 1, -1):
                    return TuVerdict(False, (rows, cols, det))
    return TuVerdict(True)
