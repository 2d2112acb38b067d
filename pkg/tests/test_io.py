"""MPS parsing/writing, archives, and solution files."""

from fractions import Fraction

import pytest

from lpfold import (
    InitialPartitionSpec,
    Problem,
    RowSense,
    SparseMatrix,
    compute_delta_center,
    lift_solution,
    refine_reflection,
    standard_form,
    NEG_INF,
    POS_INF,
)
from lpfold.cli import build_reduction, make_archive
from lpfold.generate import gen_dup_random, gen_gap, gen_paper_example, gen_reflect_random
from lpfold.io import (
    ArchiveError,
    MpsParseError,
    read_archive,
    read_mps,
    read_solution,
    write_archive,
    write_mps,
    write_solution,
)
from lpfold.netmat import NetworkMode


def roundtrip(problem, tmp_path, name="x.mps"):
    path = str(tmp_path / name)
    write_mps(problem, path)
    return read_mps(path)


def assert_same_problem(a, b):
    assert a.matrix == b.matrix
    assert a.rhs == b.rhs
    assert a.lower == b.lower
    assert a.upper == b.upper
    assert a.objective == b.objective
    assert [s.value for s in a.row_sense] == [s.value for s in b.row_sense]
    assert a.integral == b.integral
    assert a.objective_offset == b.objective_offset
    assert a.row_names == b.row_names
    assert a.col_names == b.col_names


class TestReadMps:
    def test_minimal_instance(self, tmp_path):
        text = """NAME tiny
ROWS
 N  obj
 E  r1
COLUMNS
    x1  obj  1.0   r1  2
RHS
    RHS r1  4
ENDATA
"""
        path = tmp_path / "tiny.mps"
        path.write_text(text)
        p = read_mps(str(path))
        assert (p.nrows, p.ncols) == (1, 1)
        assert p.matrix.entry(0, 0) == 2
        assert p.rhs == [4]
        assert p.objective == [1]

    def test_paper_example_mps_matches(self, tmp_path):
        golden, _ = gen_paper_example()
        p = roundtrip(golden, tmp_path)
        assert_same_problem(golden, p)

    def test_exact_decimal_parse(self, tmp_path):
        text = """NAME f
ROWS
 N obj
 E r
COLUMNS
 x obj 0.1 r 2.5e-1
RHS
 RHS r 0.3
ENDATA
"""
        path = tmp_path / "f.mps"
        path.write_text(text)
        p = read_mps(str(path))
        assert p.matrix.entry(0, 0) == Fraction(1, 4)
        assert p.rhs == [Fraction(3, 10)]
        assert p.objective == [Fraction(1, 10)]

    def test_integer_markers(self, tmp_path):
        text = """NAME m
ROWS
 N obj
 L r
COLUMNS
    MARKER1 'MARKER' 'INTORG'
    y obj 1 r 1
    MARKER2 'MARKER' 'INTEND'
    x obj 1 r 1
RHS
    RHS r 3
BOUNDS
 UP B y 7
ENDATA
"""
        path = tmp_path / "m.mps"
        path.write_text(text)
        p = read_mps(str(path))
        assert p.integral == frozenset({0})
        assert p.upper == [7, POS_INF]

    def test_bound_codes(self, tmp_path):
        text = """NAME b
ROWS
 N obj
 E r
COLUMNS
 a r 1
 b r 1
 c r 1
 d r 1
 e r 1
 f r 1
RHS
BOUNDS
 LO B a -3
 UP B a 4
 FX B b 2
 FR B c
 MI B d
 BV B e
 UI B f 9
ENDATA
"""
        path = tmp_path / "b.mps"
        path.write_text(text)
        p = read_mps(str(path))
        assert p.lower == [-3, 2, NEG_INF, NEG_INF, 0, 0]
        assert p.upper == [4, 2, POS_INF, POS_INF, 1, 9]
        assert p.integral == frozenset({4, 5})

    def test_objsense_max_flips(self, tmp_path):
        text = """NAME s
OBJSENSE
    MAX
ROWS
 N obj
 L r
COLUMNS
 x obj 3 r 1
RHS
 RHS r 5
ENDATA
"""
        path = tmp_path / "s.mps"
        path.write_text(text)
        p = read_mps(str(path))
        assert p.objective == [-3]

    def test_ranges_become_bounded_slack(self, tmp_path):
        text = """NAME rg
ROWS
 N obj
 L r
COLUMNS
 x r 1
RHS
 RHS r 10
RANGES
 RNG r 4
ENDATA
"""
        path = tmp_path / "rg.mps"
        path.write_text(text)
        p = read_mps(str(path))
        assert p.ncols == 2
        assert p.row_sense == [RowSense.EQ]
        assert p.rhs == [10]
        assert p.upper[1] == 4 and p.lower[1] == 0
        # activity of x must sit in [6, 10]
        assert p.is_feasible([7, 3])
        assert not p.is_feasible([5, 4])

    def test_objective_offset_convention(self, tmp_path):
        p = Problem(matrix=SparseMatrix.from_dense([[1]]), rhs=[1],
                    lower=[0], upper=[5], objective=[1],
                    objective_offset=Fraction(7, 2))
        back = roundtrip(p, tmp_path)
        assert back.objective_offset == Fraction(7, 2)

    def test_parse_error_has_line_number(self, tmp_path):
        path = tmp_path / "bad.mps"
        path.write_text("NAME x\nROWS\n Q  r1\nENDATA\n")
        with pytest.raises(MpsParseError) as err:
            read_mps(str(path))
        assert "line 3" in str(err.value)

    def test_duplicate_entry_rejected(self, tmp_path):
        path = tmp_path / "dup.mps"
        path.write_text("""NAME d
ROWS
 N obj
 E r
COLUMNS
 x r 1 r 2
RHS
ENDATA
""")
        with pytest.raises(MpsParseError):
            read_mps(str(path))

    def test_unknown_bound_code_rejected(self, tmp_path):
        path = tmp_path / "ub.mps"
        path.write_text("""NAME u
ROWS
 N obj
 E r
COLUMNS
 x r 1
RHS
BOUNDS
 XX B x 1
ENDATA
""")
        with pytest.raises(MpsParseError):
            read_mps(str(path))


class TestWriteMps:
    @pytest.mark.parametrize("seed", range(5))
    def test_roundtrip_random_corpus(self, seed, tmp_path):
        problem, _ = gen_dup_random(4 + seed, 6 + seed, 2, seed=seed)
        assert_same_problem(problem, roundtrip(problem, tmp_path))

    def test_roundtrip_gap(self, tmp_path):
        problem, _ = gen_gap(2, [(2, 2, 3), (1, 1, 1)], [3, 2])
        assert_same_problem(problem, roundtrip(problem, tmp_path))

    def test_roundtrip_reflect(self, tmp_path):
        problem, _ = gen_reflect_random(4, 8, 2, seed=1)
        assert_same_problem(problem, roundtrip(problem, tmp_path))

    def test_byte_deterministic(self, tmp_path):
        problem, _ = gen_gap(2, [(2, 2, 3)], [4, 3])
        a, b = str(tmp_path / "a.mps"), str(tmp_path / "b.mps")
        write_mps(problem, a)
        write_mps(problem, b)
        assert open(a, "rb").read() == open(b, "rb").read()


class TestArchive:
    def _setup(self, tmp_path, mode="lp-reflect"):
        problem, _ = gen_paper_example()
        network = NetworkMode.NETWORK
        reduction, ledger, _ = build_reduction(problem, mode, network)
        archive = make_archive(problem, reduction, mode, network, ledger)
        path = str(tmp_path / "a.map")
        write_archive(archive, path)
        return problem, reduction, archive, read_archive(path)

    def test_roundtrip_fields(self, tmp_path):
        _, reduction, archive, back = self._setup(tmp_path)
        assert back.mode == archive.mode
        assert back.partition == archive.partition
        assert back.delta == archive.delta
        assert back.reduced_offset == archive.reduced_offset
        assert back.n_structural == archive.n_structural
        assert back.source_col_names == archive.source_col_names

    def test_archive_lift_equals_in_memory(self, tmp_path):
        problem, reduction, _, back = self._setup(tmp_path)
        y = [Fraction(-1), 3, 0]
        in_memory = lift_solution(y, reduction.partition, reduction.delta)
        from_archive = lift_solution(y, back.partition, back.delta)
        assert in_memory == from_archive

    def test_milp_ledger_roundtrip(self, tmp_path):
        problem, _ = gen_gap(2, [(2, 2, 3), (1, 1, 1)], [3, 2])
        reduction, ledger, _ = build_reduction(problem, "milp", NetworkMode.NETWORK)
        archive = make_archive(problem, reduction, "milp", NetworkMode.NETWORK, ledger)
        path = str(tmp_path / "g.map")
        write_archive(archive, path)
        back = read_archive(path)
        assert back.ledger is not None
        assert [(lp.cols, lp.signs, lp.cancel) for lp in back.ledger.linked] == \
            [(lp.cols, lp.signs, lp.cancel) for lp in ledger.linked]
        assert back.ledger.network_cols == ledger.network_cols
        assert back.ledger.v_r == ledger.v_r

    def test_rational_delta_roundtrip(self, tmp_path):
        # non-dyadic rationals must survive as p/q literals
        from lpfold.io import PostsolveArchive
        from lpfold.model import BiPartition
        archive = PostsolveArchive(
            mode="lp-reflect", network="none", original_shape=(1, 1, 1),
            n_structural=1, source_col_names=["x"],
            partition=BiPartition.identity(1, 1),
            delta=[Fraction(1, 3)], reduced_offset=Fraction(-2, 7))
        path = str(tmp_path / "r.map")
        write_archive(archive, path)
        back = read_archive(path)
        assert back.delta == [Fraction(1, 3)]
        assert back.reduced_offset == Fraction(-2, 7)

    def test_bad_archive_rejected(self, tmp_path):
        path = tmp_path / "bad.map"
        path.write_text("not an archive\n")
        with pytest.raises(ArchiveError):
            read_archive(str(path))


class TestSolutions:
    def test_roundtrip(self, tmp_path):
        path = str(tmp_path / "s.sol")
        write_solution(["x1", "x2", "x3"], [Fraction(1, 3), 2, Fraction(-5, 4)], path)
        back = read_solution(path)
        assert back == {"x1": Fraction(1, 3), "x2": 2, "x3": Fraction(-5, 4)}

    def test_exact_decimal_when_terminating(self, tmp_path):
        path = str(tmp_path / "t.sol")
        write_solution(["a", "b"], [Fraction(-5, 4), Fraction(1, 3)], path)
        text = open(path).read()
        assert "a -1.25" in text
        assert "b 1/3" in text
