"""Network recognition soundness, duality, and the TU brute-force oracle."""

import random

import pytest

from lpfold import (
    NetworkMode,
    NetworkState,
    SparseMatrix,
    augment_network,
    tu_bruteforce,
)
from lpfold.netmat import TuVerdict


def det3(m):
    """Cofactor expansion, the independent determinant route for 3x3."""
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


DET2_WITNESS = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]


class TestAugmentNetwork:
    def test_single_arc_column(self):
        state = NetworkState(3)
        assert augment_network(state, [1, -1, 0])
        assert state.ncols == 1

    def test_det2_triple_rejected_at_completion(self):
        assert det3(DET2_WITNESS) == 2
        state = NetworkState(3)
        cols = [[row[c] for row in DET2_WITNESS] for c in range(3)]
        assert augment_network(state, cols[0])
        assert augment_network(state, cols[1])
        assert not augment_network(state, cols[2])
        assert state.ncols == 2  # rejection leaves the state unchanged

    @pytest.mark.parametrize("seed", range(10))
    def test_incidence_columns_always_accepted(self, seed):
        rng = random.Random(seed)
        nodes = rng.randint(2, 7)
        arcs = rng.randint(1, 10)
        cols = []
        for _ in range(arcs):
            u, v = rng.sample(range(nodes), 2)
            col = [0] * nodes
            col[u], col[v] = 1, -1
            cols.append(col)
        order = list(range(arcs))
        rng.shuffle(order)
        state = NetworkState(nodes)
        for c in order:
            assert augment_network(state, cols[c])

    def test_non_ternary_rejected_as_input_error(self):
        state = NetworkState(2)
        with pytest.raises(ValueError):
            augment_network(state, [2, 0])

    def test_wrong_length_rejected(self):
        state = NetworkState(2)
        with pytest.raises(ValueError):
            augment_network(state, [1, 0, 0])

    def test_deterministic_trace(self):
        rng = random.Random(9)
        cols = [[rng.choice([-1, 0, 0, 1]) for _ in range(5)] for _ in range(6)]
        traces = []
        for _ in range(2):
            state = NetworkState(5)
            traces.append([augment_network(state, c) for c in cols])
        assert traces[0] == traces[1]

    def test_clone_isolation(self):
        state = NetworkState(3)
        augment_network(state, [1, -1, 0])
        branch = state.clone()
        augment_network(branch, [0, 1, -1])
        assert state.ncols == 1 and branch.ncols == 2

    @pytest.mark.parametrize("seed", range(120))
    def test_soundness_random_ternary(self, seed):
        """Whatever the greedy augmentation certifies must be TU."""
        rng = random.Random(seed)
        rows, cols = rng.randint(2, 6), rng.randint(2, 6)
        state = NetworkState(rows)
        for _ in range(cols):
            col = [rng.choice([-1, 0, 0, 1]) for _ in range(rows)]
            augment_network(state, col)
        verdict = tu_bruteforce(state.matrix())
        assert verdict.is_tu

    @pytest.mark.parametrize("seed", range(40))
    def test_mode_duality(self, seed):
        """A matrix accepted column-by-column in transposed mode has its
        transpose accepted row-by-column in network mode."""
        rng = random.Random(1000 + seed)
        rows, cols = rng.randint(2, 5), rng.randint(2, 5)
        matrix = [[rng.choice([-1, 0, 0, 1]) for _ in range(cols)]
                  for _ in range(rows)]
        tstate = NetworkState(rows, NetworkMode.TRANSPOSED)
        accepted = []
        for c in range(cols):
            col = [matrix[r][c] for r in range(rows)]
            if augment_network(tstate, col):
                accepted.append(c)
        # transpose of the accepted set, fed as network columns
        nstate = NetworkState(len(accepted), NetworkMode.NETWORK)
        for r in range(rows):
            row = [matrix[r][c] for c in accepted]
            assert augment_network(nstate, row)

    def test_path_matrix_accepted(self):
        # columns are (signed) paths in the 3-edge path tree
        state = NetworkState(3)
        assert augment_network(state, [1, 1, 0])
        assert augment_network(state, [0, 1, 1])
        assert augment_network(state, [1, 1, 1])
        assert not augment_network(state, [1, 0, 1])  # would need det 2

    def test_sign_consistency_enforced(self):
        # same support, incompatible signs: [[1,1],[1,-1]] has det -2
        state = NetworkState(2)
        assert augment_network(state, [1, 1])
        assert not augment_network(state, [1, -1])
        # either column alone is fine, and so is a sign-consistent pair
        state2 = NetworkState(2)
        assert augment_network(state2, [1, -1])
        assert augment_network(state2, [1, -1])


class TestTuBruteforce:
    def test_identity_is_tu(self):
        m = SparseMatrix.from_dense([[1 if i == j else 0 for j in range(4)]
                                     for i in range(4)])
        assert tu_bruteforce(m).is_tu

    def test_det2_witness_found(self):
        m = SparseMatrix.from_dense(DET2_WITNESS)
        verdict = tu_bruteforce(m)
        assert not verdict.is_tu
        rows, cols, det = verdict.witness
        assert (rows, cols) == ((0, 1, 2), (0, 1, 2))
        assert det in (2, -2)
        assert det == det3(DET2_WITNESS)

    def test_gap_fiber_matrix_is_tu(self):
        # linking + once-per-item rows of a 2-knapsack, 3-item postsolve:
        # a bipartite node-edge incidence structure
        dense = [
            # once rows (items) over x_{ij}
            [1, 0, 0, 1, 0, 0],
            [0, 1, 0, 0, 1, 0],
            [0, 0, 1, 0, 0, 1],
            # linking rows per knapsack and the duplicated class {j1, j2}
            [1, 1, 0, 0, 0, 0],
            [0, 0, 0, 1, 1, 0],
        ]
        assert tu_bruteforce(SparseMatrix.from_dense(dense)).is_tu

    def test_max_order_limits_search(self):
        m = SparseMatrix.from_dense(DET2_WITNESS)
        assert tu_bruteforce(m, max_order=2).is_tu  # all 2x2 minors are fine

    def test_fractional_entry_is_witnessed(self):
        from fractions import Fraction
        m = SparseMatrix.from_dense([[Fraction(1, 2)]])
        verdict = tu_bruteforce(m)
        assert not verdict.is_tu
        assert verdict.witness[2] == Fraction(1, 2)

    def test_verdict_invariants(self):
        with pytest.raises(ValueError):
            TuVerdict(True, ((0,), (0,), 2))
        with pytest.raises(ValueError):
            TuVerdict(False, None)
