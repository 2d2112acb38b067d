"""Exact simplex against vertex enumeration, plus fiber vertex integrality."""

import random
from fractions import Fraction

import pytest

from lpfold import (
    InitialPartitionSpec,
    Problem,
    RowSense,
    SparseMatrix,
    compute_delta_center,
    reduce_matrices,
    refine_reflection,
    solve_lp,
    standard_form,
    NEG_INF,
    POS_INF,
)
from lpfold.generate import gen_dup_random, gen_paper_example

from _oracles import vertex_min


def make_problem(dense, rhs, senses=None, lower=None, upper=None, obj=None):
    n = len(dense[0]) if dense else 0
    m = len(dense)
    return Problem(
        matrix=SparseMatrix.from_dense(dense),
        rhs=list(rhs),
        lower=lower if lower is not None else [0] * n,
        upper=upper if upper is not None else [POS_INF] * n,
        objective=obj if obj is not None else [0] * n,
        row_sense=[RowSense(s) for s in senses] if senses else [RowSense.EQ] * m,
    )


class TestSolveLp:
    def test_paper_reduced_lp(self):
        # min z; z + s12 = 2; -z + s3 = 1; -2 <= z <= 2; s >= 0
        p = make_problem([[1, 1, 0], [-1, 0, 1]], [2, 1],
                         lower=[-2, 0, 0], upper=[2, POS_INF, POS_INF],
                         obj=[1, 0, 0])
        res = solve_lp(p)
        assert res.is_optimal
        assert res.objective == -1
        best, _ = vertex_min(p.matrix.to_dense(), p.rhs, ["E", "E"],
                             p.lower, p.upper, p.objective)
        assert best == -1

    def test_paper_original_lp(self):
        problem, _ = gen_paper_example()
        res = solve_lp(problem)
        assert res.is_optimal and res.objective == -1
        best, _ = vertex_min(problem.matrix.to_dense(), problem.rhs,
                             ["E"] * 3, problem.lower, problem.upper,
                             problem.objective)
        assert best == -1

    def test_infeasible_rows(self):
        # x1 >= 1 and x1 <= 0 expressed through rows
        p = make_problem([[1], [1]], [1, 0], senses=["G", "L"],
                         upper=[5], obj=[1])
        assert solve_lp(p).status == "infeasible"

    def test_unbounded(self):
        p = make_problem([[1, -1]], [0], obj=[-1, 0],
                         upper=[POS_INF, POS_INF])
        assert solve_lp(p).status == "unbounded"

    def test_negative_box_without_zero(self):
        # boxes need not contain the origin
        p = make_problem([[1, 1]], [7], lower=[3, 2], upper=[5, 6], obj=[1, 2])
        res = solve_lp(p)
        assert res.is_optimal
        assert res.objective == 9  # x = (5, 2)
        assert res.x == [5, 2]

    def test_free_variables(self):
        p = make_problem([[1, 1]], [4], lower=[NEG_INF, 0],
                         upper=[POS_INF, POS_INF], obj=[1, 0])
        assert solve_lp(p).status == "unbounded"
        p2 = make_problem([[1, 1]], [4], lower=[NEG_INF, 0],
                          upper=[POS_INF, 1], obj=[-1, 1])
        res = solve_lp(p2)
        assert res.is_optimal
        assert res.objective == -4  # x = (4, 0)

    def test_fractional_data(self):
        p = make_problem([[Fraction(1, 3), 1]], [1], upper=[3, 3],
                         obj=[1, 1], senses=["G"])
        res = solve_lp(p)
        assert res.is_optimal
        assert res.objective == 1  # put everything on the 1/3 column: x1=3

    def test_offset_carried(self):
        p = make_problem([[1]], [2], upper=[5], obj=[1])
        p2 = Problem(matrix=p.matrix, rhs=p.rhs, lower=p.lower, upper=p.upper,
                     objective=p.objective, row_sense=p.row_sense,
                     objective_offset=Fraction(7, 2))
        res = solve_lp(p2)
        assert res.objective == 2 + Fraction(7, 2)

    @pytest.mark.parametrize("seed", range(15))
    def test_random_cross_check_vertex_oracle(self, seed):
        rng = random.Random(seed)
        rows, cols = rng.randint(1, 3), rng.randint(2, 5)
        dense = [[rng.randint(-2, 3) for _ in range(cols)] for _ in range(rows)]
        lower = [rng.randint(-2, 0) for _ in range(cols)]
        upper = [lo + rng.randint(0, 4) for lo in lower]
        x_hat = [rng.randint(lo, hi) for lo, hi in zip(lower, upper)]
        rhs = [sum(dense[v][w] * x_hat[w] for w in range(cols)) for v in range(rows)]
        senses = [rng.choice(["E", "L", "G"]) for _ in range(rows)]
        for v in range(rows):  # keep x_hat feasible under the drawn sense
            if senses[v] == "L":
                rhs[v] += rng.randint(0, 2)
            elif senses[v] == "G":
                rhs[v] -= rng.randint(0, 2)
        obj = [rng.randint(-3, 3) for _ in range(cols)]
        p = make_problem(dense, rhs, senses=senses, lower=lower, upper=upper, obj=obj)
        res = solve_lp(p)
        assert res.is_optimal
        best, _ = vertex_min(dense, rhs, senses, lower, upper, obj)
        assert res.objective == best
        assert p.is_feasible(res.x)

    def test_solution_satisfies_rows_exactly(self):
        problem, _ = gen_dup_random(6, 8, 2, seed=5)
        res = solve_lp(problem)
        assert res.is_optimal
        for v in range(problem.nrows):
            assert problem.row_activity(v, res.x) == problem.rhs[v]

    def test_guardrail_warns_but_solves(self):
        cols = 510
        dense = [[1] * cols]
        p = make_problem(dense, [1], upper=[1] * cols, obj=[1] * cols)
        with pytest.warns(UserWarning):
            res = solve_lp(p)
        assert res.is_optimal and res.objective == 1


class _BoxFiber:
    """Minimal duck-typed fiber for optimal_vertex_on_fiber tests."""

    def __init__(self, problem):
        self.problem = problem
        self.base = problem

    def to_problem(self, objective=None):
        if objective is None:
            return self.problem
        from dataclasses import replace
        return replace(self.problem, objective=list(objective))

    def dump(self):
        return "box-fiber"


class TestFiberVertices:
    def test_fixed_point_fiber(self):
        p = make_problem([[1, 0], [0, 1]], [2, 3], upper=[5, 5], obj=[1, 1])
        from lpfold import optimal_vertex_on_fiber
        res = optimal_vertex_on_fiber(_BoxFiber(p))
        assert res.x == [2, 3]

    def test_infeasible_fiber_raises(self):
        p = make_problem([[1], [1]], [1, 2], upper=[5], obj=[1])
        from lpfold import optimal_vertex_on_fiber
        with pytest.raises(RuntimeError):
            optimal_vertex_on_fiber(_BoxFiber(p))

    @pytest.mark.parametrize("seed", range(50))
    def test_random_tu_fibers_have_integral_vertices(self, seed):
        """Hoffman-Kruskal property check: node-arc incidence constraint
        matrices with integral rhs and boxes give integral optimal vertices."""
        rng = random.Random(seed)
        nodes = rng.randint(2, 5)
        arcs = rng.randint(2, 7)
        dense = [[0] * arcs for _ in range(nodes)]
        for a in range(arcs):
            u, v = rng.sample(range(nodes), 2)
            dense[u][a] = 1
            dense[v][a] = -1
        flow = [rng.randint(0, 3) for _ in range(arcs)]
        rhs = [sum(dense[n][a] * flow[a] for a in range(arcs)) for n in range(nodes)]
        obj = [rng.randint(-3, 3) for _ in range(arcs)]
        p = make_problem(dense, rhs, lower=[0] * arcs, upper=[4] * arcs, obj=obj)
        res = solve_lp(p)
        assert res.is_optimal
        for val in res.x:
            assert Fraction(val).denominator == 1
