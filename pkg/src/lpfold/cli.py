"""Command-line pipeline: reduce, postsolve, verify, stats, gen.

Exit codes: 0 success, 2 parse/usage error, 3 verification failure,
4 internal invariant breach.  LPFOLD_SEED overrides --seed everywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

from . import generate
from .io import (
    ArchiveError,
    MpsParseError,
    PostsolveArchive,
    read_archive,
    read_mps,
    read_solution,
    write_archive,
    write_mps,
    write_solution,
)
from .lpexact import solve_lp
from .milpfold import AtuLedger, detect_milp_reduction, milp_postsolve
from .model import (
    BiPartition,
    Problem,
    ReflectionReduction,
    RowSense,
    SparseMatrix,
    reduce_matrices,
    standard_form,
)
from .netmat import NetworkMode
from .rationals import NEG_INF, POS_INF, format_exact, normalize
from .refine import (
    InitialPartitionSpec,
    compute_delta_center,
    refine_plain,
    refine_reflection,
    sparsify_delta,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_INVARIANT = 4


def _relax_integrality(problem: Problem) -> Problem:
    if problem.is_pure_lp():
        return problem
    return replace(problem, integral=frozenset())


def build_reduction(problem: Problem, mode: str,
                    network: NetworkMode = NetworkMode.NETWORK
                    ) -> Tuple[ReflectionReduction, Optional[AtuLedger], bool]:
    """Run the requested pipeline; returns (reduction, ledger, relaxed_flag)."""
    relaxed = False
    if mode in ("lp", "lp-reflect") and not problem.is_pure_lp():
        problem = _relax_integrality(problem)
        relaxed = True
    if mode == "lp":
        eq, n_struct = standard_form(problem)
        part = refine_plain(eq, InitialPartitionSpec.empty())
        delta = [0] * eq.ncols
        reduced = reduce_matrices(eq, part, delta)
        return ReflectionReduction(eq, part, delta, reduced, n_struct), None, relaxed
    if mode == "lp-reflect":
        # emits the centered-offset reduction; sparsified offsets are used on
        # the milp path where delta integrality is required
        eq, n_struct = standard_form(problem)
        delta_c = compute_delta_center(eq)
        part = refine_reflection(eq, InitialPartitionSpec.empty(), delta_c)
        reduced = reduce_matrices(eq, part, delta_c)
        return ReflectionReduction(eq, part, delta_c, reduced, n_struct), None, relaxed
    if mode == "milp":
        _, ledger, reduction = detect_milp_reduction(problem, network)
        return reduction, ledger, False
    raise ValueError(f"unknown mode {mode!r}")


def convert_slack_parts(reduced: Problem, partition: BiPartition,
                        n_structural: int) -> Tuple[Problem, List[str]]:
    """Turn pure-slack reduced columns back into inequality rows when a part
    consists only of internal slacks with reduced bounds [0, inf), zero
    objective, and a single incident row.  Purely cosmetic; dropped parts
    keep zero objective so solution mapping is unaffected."""
    col_parts = partition.unipolar_col_parts()
    drop: Dict[int, Tuple[int, object]] = {}
    used_rows = set()
    for q, cp in enumerate(col_parts):
        if any(w < n_structural for w in cp.members):
            continue
        if reduced.objective[q] != 0 or reduced.lower[q] != 0 or reduced.upper[q] != POS_INF:
            continue
        incident = reduced.matrix.cols[q]
        if len(incident) != 1:
            continue
        (row, coeff), = incident.items()
        if row in used_rows or reduced.row_sense[row] is not RowSense.EQ:
            continue
        used_rows.add(row)
        drop[q] = (row, coeff)
    if not drop:
        return reduced, []

    keep = [q for q in range(reduced.ncols) if q not in drop]
    remap = {q: k for k, q in enumerate(keep)}
    mat = SparseMatrix(reduced.nrows, len(keep))
    for q in keep:
        for v, a in reduced.matrix.cols[q].items():
            mat.set_entry(v, remap[q], a)
    senses = list(reduced.row_sense)
    for q, (row, coeff) in drop.items():
        senses[row] = RowSense.LE if coeff > 0 else RowSense.GE
    dropped_names = [reduced.col_names[q] for q in sorted(drop)]
    out = Problem(
        matrix=mat, rhs=list(reduced.rhs),
        lower=[reduced.lower[q] for q in keep],
        upper=[reduced.upper[q] for q in keep],
        objective=[reduced.objective[q] for q in keep],
        row_sense=senses,
        integral=frozenset(remap[q] for q in reduced.integral if q in remap),
        objective_offset=reduced.objective_offset,
        row_names=list(reduced.row_names),
        col_names=[reduced.col_names[q] for q in keep],
        name=reduced.name,
    )
    return out, dropped_names


def make_archive(problem: Problem, reduction: ReflectionReduction,
                 mode: str, network: NetworkMode,
                 ledger: Optional[AtuLedger]) -> PostsolveArchive:
    net = "none"
    if mode == "milp":
        net = "network" if network is NetworkMode.NETWORK else "transposed"
    return PostsolveArchive(
        mode=mode, network=net,
        original_shape=(problem.nrows, problem.ncols, problem.nnz),
        n_structural=reduction.n_structural,
        source_col_names=list(reduction.source.col_names),
        partition=reduction.partition,
        delta=list(reduction.delta),
        reduced_offset=reduction.reduced.objective_offset,
        ledger=ledger,
    )


def _seed(args) -> int:
    env = os.environ.get("LPFOLD_SEED")
    if env is not None:
        return int(env)
    return args.seed


def cmd_reduce(args) -> int:
    problem = read_mps(args.input)
    network = NetworkMode.NETWORK if args.network == "cols" else NetworkMode.TRANSPOSED
    t0 = time.perf_counter()
    reduction, ledger, relaxed = build_reduction(problem, args.mode, network)
    emitted, dropped = convert_slack_parts(
        reduction.reduced, reduction.partition, reduction.n_structural)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    out = args.out or f"{args.input}.reduced.mps"
    map_path = args.map or f"{args.input}.map"
    write_mps(emitted, out)
    write_archive(make_archive(problem, reduction, args.mode, network, ledger), map_path)
    implied = len(ledger.network_cols) if ledger else 0
    print(f"{problem.name}: {problem.nrows} rows x {problem.ncols} cols "
          f"({problem.nnz} nonzeros)")
    print(f"reduced: {emitted.nrows} rows x {emitted.ncols} cols "
          f"({emitted.nnz} nonzeros), {len(dropped)} slack parts folded into senses")
    if relaxed:
        print("note: integrality marks ignored (LP mode); reduced instance is continuous")
    print(f"detection time: {elapsed_ms:.1f} ms")
    print(f"LPFOLD-SUMMARY mode={args.mode} network={args.network} "
          f"rows={problem.nrows} cols={problem.ncols} nnz={problem.nnz} "
          f"red_rows={emitted.nrows} red_cols={emitted.ncols} red_nnz={emitted.nnz} "
          f"implied_integral={implied} relaxed={int(relaxed)} time_ms={elapsed_ms:.1f}")
    return EXIT_OK


def _rebuild_source(original: Problem, archive: PostsolveArchive) -> Problem:
    base = original if archive.mode == "milp" else _relax_integrality(original)
    eq, n_struct = standard_form(base)
    if n_struct != archive.n_structural or eq.col_names != archive.source_col_names:
        raise ArchiveError("archive does not match the original instance")
    return eq

def _check_fingerprint(original: Problem, archive: PostsolveArchive) -> None:
    if archive.original_shape != (original.nrows, original.ncols, original.nnz):
        raise ArchiveError(
            f"archive fingerprint {archive.original_shape} does not match "
            f"instance ({original.nrows}, {original.ncols}, {original.nnz})")


def cmd_postsolve(args) -> int:
    original = read_mps(args.original)
    archive = read_archive(args.archive)
    _check_fingerprint(original, archive)
    eq = _rebuild_source(original, archive)
    reduced = reduce_matrices(eq, archive.partition, archive.delta)
    values = read_solution(args.solution)
    names = archive.reduced_col_names()
    y = [values.get(n, 0) for n in names]

    if archive.mode == "milp":
        reduction = ReflectionReduction(eq, archive.partition, archive.delta,
                                        reduced, archive.n_structural)
        x_full = milp_postsolve(reduction, archive.ledger, y)
    else:
        from .model import lift_solution
        x_full = lift_solution(y, archive.partition, archive.delta)
    x = x_full[: archive.n_structural]

    if not original.is_feasible(x):
        print("postsolve produced an infeasible point; diagnostic dump follows",
              file=sys.stderr)
        for name, val in zip(original.col_names, x):
            print(f"  {name} = {format_exact(val)}", file=sys.stderr)
        return EXIT_INVARIANT
    if archive.mode == "milp":
        from fractions import Fraction
        for w in sorted(original.integral):
            if Fraction(x[w]).denominator != 1:
                print(f"postsolve point fractional on integer column "
                      f"{original.col_names[w]}", file=sys.stderr)
                return EXIT_INVARIANT
    out = args.out or f"{args.solution}.original"
    write_solution(original.col_names, x, out)
    obj = original.objective_value(x)
    print(f"postsolved objective: {format_exact(obj)}")
    print(f"solution written to {out}")
    return EXIT_OK


def _bounded_random_objective(problem: Problem, rng: random.Random) -> List[int]:
    obj = []
    for j in range(problem.ncols):
        lo, hi = problem.lower[j], problem.upper[j]
        if hi == POS_INF and lo == NEG_INF:
            obj.append(0)
        elif hi == POS_INF:
            obj.append(rng.randint(0, 4))
        elif lo == NEG_INF:
            obj.append(-rng.randint(0, 4))
        else:
            obj.append(rng.randint(-4, 4))
    return obj


def verify_reduction(original: Problem, archive: PostsolveArchive,
                     reduced_file: Optional[Problem], samples: int,
                     seed: int) -> List[str]:
    """Round-trip checks; returns a list of failure descriptions."""
    failures: List[str] = []
    try:
        _check_fingerprint(original, archive)
        eq = _rebuild_source(original, archive)
        reduced = reduce_matrices(eq, archive.partition, archive.delta)
    except (ArchiveError, ValueError) as exc:
        return [f"archive rejected: {exc}"]
    if reduced.objective_offset != archive.reduced_offset:
        failures.append("archive offset does not match the rebuilt reduction")
    if reduced_file is not None:
        emitted, _ = convert_slack_parts(reduced, archive.partition,
                                         archive.n_structural)
        if (emitted.nrows, emitted.ncols) != (reduced_file.nrows, reduced_file.ncols):
            failures.append("reduced file shape does not match the archive")
        elif emitted.col_names != reduced_file.col_names:
            failures.append("reduced file columns do not match the archive")

    rng = random.Random(seed)
    from .model import lift_solution, project_solution
    for k in range(samples):
        obj = _bounded_random_objective(eq, rng)
        res = solve_lp(replace(eq, objective=obj))
        if not res.is_optimal:
            failures.append(f"sample {k}: original side solve was {res.status}")
            continue
        x = res.x
        y = project_solution(x, archive.partition, archive.delta)
        if not reduced.is_feasible(y):
            failures.append(f"sample {k}: projected point infeasible in reduction")
        if reduced.objective_value(y) != eq.objective_value(x):
            failures.append(f"sample {k}: projected objective mismatch")
    for k in range(samples):
        obj = _bounded_random_objective(reduced, rng)
        res = solve_lp(replace(reduced, objective=obj))
        if not res.is_optimal:
            failures.append(f"sample {k}: reduced side solve was {res.status}")
            continue
        y = res.x
        x = lift_solution(y, archive.partition, archive.delta)
        if not eq.is_feasible(x):
            failures.append(f"sample {k}: lifted point infeasible in source form")
        if not original.is_feasible(x[: archive.n_structural]):
            failures.append(f"sample {k}: lifted point infeasible in original")
        if reduced.objective_value(y) != eq.objective_value(x):
            failures.append(f"sample {k}: lifted objective mismatch")
    return failures


def cmd_verify(args) -> int:
    original = read_mps(args.original)
    reduced_file = read_mps(args.reduced) if args.reduced else None
    archive = read_archive(args.archive)
    failures = verify_reduction(original, archive, reduced_file,
                                args.samples, _seed(args))
    if failures:
        for f in failures:
            print(f"FAIL {f}")
        print(f"verify: {len(failures)} failure(s)")
        return EXIT_VERIFY
    print(f"verify: ok ({args.samples} samples per direction)")
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = _seed(args)
    if args.kind == "paper-example":
        problem, truth = generate.gen_paper_example()
    elif args.kind == "gap":
        if args.items:
            items = generate.parse_gap_items(args.items)
            caps = [int(c) for c in args.cap.split(",")]
            problem, truth = generate.gen_gap(args.knapsacks, items, caps)
        else:
            problem, truth = generate.gen_random_gap(seed, args.knapsacks, args.max_items)
    elif args.kind == "dup-random":
        problem, truth = generate.gen_dup_random(args.rows, args.cols, args.dups, seed)
    elif args.kind == "reflect-random":
        problem, truth = generate.gen_reflect_random(
            args.rows, args.cols, args.mirrors, seed,
            negated_row_pairs=args.negated_rows)
    else:
        raise ValueError(f"unknown kind {args.kind!r}")
    out = args.out or f"{args.kind}.mps"
    write_mps(problem, out)
    with open(f"{out}.truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    print(f"wrote {out} ({problem.nrows} rows x {problem.ncols} cols) "
          f"and {out}.truth.json")
    return EXIT_OK


def cmd_stats(args) -> int:
    problem = read_mps(args.input)
    senses = {"E": 0, "L": 0, "G": 0}
    for s in problem.row_sense:
        senses[s.value] += 1
    print(f"name={problem.name} rows={problem.nrows} cols={problem.ncols} "
          f"nnz={problem.nnz} integers={len(problem.integral)} "
          f"eq={senses['E']} le={senses['L']} ge={senses['G']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpfold",
        description="Dimension reduction for (MI)LPs via equitable partitions "
                    "and reflection symmetries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="reduce an MPS instance")
    p.add_argument("input")
    p.add_argument("--mode", choices=["lp", "lp-reflect", "milp"], default="lp-reflect")
    p.add_argument("--network", choices=["cols", "rows"], default="cols",
                   help="milp mode: detect network (cols) or transposed network (rows)")
    p.add_argument("--out")
    p.add_argument("--map")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("postsolve", help="map a reduced solution back")
    p.add_argument("solution")
    p.add_argument("archive")
    p.add_argument("original")
    p.add_argument("--out")
    p.set_defaults(func=cmd_postsolve)

    p = sub.add_parser("verify", help="round-trip checks on a reduction")
    p.add_argument("original")
    p.add_argument("reduced", nargs="?")
    p.add_argument("archive")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate a test instance")
    p.add_argument("kind", choices=["gap", "paper-example", "dup-random", "reflect-random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--knapsacks", type=int, default=2)
    p.add_argument("--items", help="gap item spec, e.g. '2x(a=2,c=3);1x(a=1,c=1)'")
    p.add_argument("--cap", help="gap capacities, e.g. '3,2'")
    p.add_argument("--max-items", type=int, default=6)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=12)
    p.add_argument("--dups", type=int, default=3)
    p.add_argument("--mirrors", type=int, default=2)
    p.add_argument("--negated-rows", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="print instance dimensions")
    p.add_argument("input")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MpsParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ArchiveError as exc:
        print(f"archive error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (RuntimeError, AssertionError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
