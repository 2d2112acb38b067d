"""Instance generators for tests and benchmarks.

All generators are deterministic under their seed and return
(problem, ground_truth) where the truth dict records what was planted.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import Problem, RowSense, SparseMatrix
from .rationals import NEG_INF, POS_INF, Rational, normalize


def gen_paper_example() -> Tuple[Problem, Dict]:
    """The worked 3x6 reflection example: three inequality rows written in
    equality form with explicit slack columns s1..s3."""
    dense = [
        [2, 1, 1, 1, 0, 0],
        [-1, -2, -1, 0, 1, 0],
        [-1, 1, 0, 0, 0, 1],
    ]
    problem = Problem(
        matrix=SparseMatrix.from_dense(dense),
        rhs=[5, -3, 1],
        lower=[0, 0, 0, 0, 0, 0],
        upper=[2, 2, 2, POS_INF, POS_INF, POS_INF],
        objective=[1, -1, 0, 0, 0, 0],
        row_sense=[RowSense.EQ] * 3,
        row_names=["r1", "r2", "r3"],
        col_names=["x1", "x2", "x3", "s1", "s2", "s3"],
        name="paperex",
    )
    truth = {
        "kind": "paper-example",
        "mirror_col_pairs": [["x1", "x2"]],
        "dropped_cols": ["x3"],
    }
    return problem, truth


def parse_gap_items(spec: str) -> List[Tuple[int, Rational, Rational]]:
    """Parse item specs like '2x(a=2,c=3);1x(a=1,c=1)' into (count, a, c)."""
    items: List[Tuple[int, Rational, Rational]] = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        count_text, _, rest = chunk.partition("x")
        rest = rest.strip().strip("()")
        fields = dict(kv.split("=") for kv in rest.split(","))
        items.append((int(count_text), normalize(Fraction(fields["a"])),
                      normalize(Fraction(fields["c"]))))
    return items


def gen_gap(knapsacks: int, items: Sequence[Tuple[int, Rational, Rational]],
            capacities: Sequence[Rational], name: str = "gap") -> Tuple[Problem, Dict]:
    """Generalized assignment MILP: binary x[i,j], knapsack capacity rows and
    once-per-item rows; minimizes the negated profit."""
    if len(capacities) != knapsacks:
        raise ValueError("one capacity per knapsack required")
    weights: List[Rational] = []
    costs: List[Rational] = []
    classes: List[int] = []
    for k, (count, a, c) in enumerate(items):
        for _ in range(count):
            weights.append(a)
            costs.append(c)
            classes.append(k)
    n_items = len(weights)
    ncols = knapsacks * n_items
    nrows = knapsacks + n_items
    mat = SparseMatrix(nrows, ncols)
    col_names: List[str] = []
    for i in range(knapsacks):
        for j in range(n_items):
            w = i * n_items + j
            mat.set_entry(i, w, weights[j])
            mat.set_entry(knapsacks + j, w, 1)
            col_names.append(f"x_{i+1}_{j+1}")
    problem = Problem(
        matrix=mat,
        rhs=list(capacities) + [1] * n_items,
        lower=[0] * ncols,
        upper=[1] * ncols,
        objective=[-costs[j] for i in range(knapsacks) for j in range(n_items)],
        row_sense=[RowSense.LE] * nrows,
        integral=frozenset(range(ncols)),
        row_names=[f"cap{i+1}" for i in range(knapsacks)]
        + [f"once{j+1}" for j in range(n_items)],
        col_names=col_names,
        name=name,
    )
    truth = {
        "kind": "gap",
        "knapsacks": knapsacks,
        "item_classes": [[j for j in range(n_items) if classes[j] == k]
                         for k in range(len(items))],
        "duplicate_groups": [
            [f"x_{i+1}_{j+1}" for j in range(n_items) if classes[j] == k]
            for i in range(knapsacks) for k in range(len(items))
            if sum(1 for cj in classes if cj == k) > 1
        ],
    }
    return problem, truth


def gen_random_gap(seed: int, max_knapsacks: int = 3, max_items: int = 6,
                   name: str = "gap") -> Tuple[Problem, Dict]:
    """Random GAP with duplicated item classes and pairwise distinct
    capacities (equal capacities make the coarsest partition cross knapsacks,
    which the ATU check then rightly rejects)."""
    rng = random.Random(seed)
    knapsacks = rng.randint(2, max_knapsacks)
    items: List[Tuple[int, Rational, Rational]] = []
    total = 0
    while total < max_items:
        count = rng.randint(1, min(3, max_items - total))
        a = rng.randint(1, 3)
        c = rng.randint(1, 5)
        if any((a, c) == (ia, ic) for _, ia, ic in items):
            continue
        items.append((count, a, c))
        total += count
        if rng.random() < 0.3:
            break
    caps = rng.sample(range(2, 2 + 4 * max_items), knapsacks)
    problem, truth = gen_gap(knapsacks, items, sorted(caps, reverse=True), name=name)
    truth["seed"] = seed
    return problem, truth


def _feasible_box_point(rng: random.Random, lower, upper) -> List[Rational]:
    point = []
    for lo, hi in zip(lower, upper):
        lo_eff = lo if lo != NEG_INF else -3
        hi_eff = hi if hi != POS_INF else lo_eff + 6
        point.append(rng.randint(int(lo_eff), int(hi_eff)))
    return point


def gen_dup_random(rows: int, cols: int, dups: int, seed: int,
                   name: str = "duprand") -> Tuple[Problem, Dict]:
    """Random equality-form LP with `dups` planted duplicate columns
    (identical matrix column, objective and bounds).  Feasibility is planted
    by deriving the rhs from a random box point."""
    if dups >= cols:
        raise ValueError("need at least one base column per duplicate")
    rng = random.Random(seed)
    base_cols = cols - dups
    entries = []
    col_data: List[List[Tuple[int, int]]] = []
    for w in range(base_cols):
        nnz = rng.randint(1, min(3, rows))
        chosen = rng.sample(range(rows), nnz)
        col = [(v, rng.choice([-2, -1, 1, 2, 3])) for v in sorted(chosen)]
        col_data.append(col)
    lower = [0] * base_cols
    upper = [rng.randint(1, 4) for _ in range(base_cols)]
    objective = [rng.randint(0, 3) for _ in range(base_cols)]
    dup_groups: Dict[int, List[int]] = {}
    for k in range(dups):
        src = rng.randrange(base_cols)
        w = base_cols + k
        col_data.append(list(col_data[src]))
        lower.append(lower[src])
        upper.append(upper[src])
        objective.append(objective[src])
        dup_groups.setdefault(src, [src]).append(w)
    for w, col in enumerate(col_data):
        for v, a in col:
            entries.append((v, w, a))
    mat = SparseMatrix.from_entries(rows, cols, entries)
    x_hat = _feasible_box_point(rng, lower, upper)
    rhs = [normalize(sum(a * x_hat[w] for w, a in mat.rows[v].items()))
           for v in range(rows)]
    problem = Problem(
        matrix=mat, rhs=rhs, lower=lower, upper=upper, objective=objective,
        row_sense=[RowSense.EQ] * rows, name=name,
    )
    truth = {
        "kind": "dup-random",
        "seed": seed,
        "dups": dups,
        "duplicate_groups": [[problem.col_names[w] for w in group]
                             for group in dup_groups.values()],
        "witness_point": [str(v) for v in x_hat],
    }
    return problem, truth


def gen_reflect_random(rows: int, cols: int, mirrors: int, seed: int,
                       name: str = "reflrand",
                       negated_row_pairs: int = 0) -> Tuple[Problem, Dict]:
    """Random equality-form LP with `mirrors` planted signed column pairs:
    the mirror has the negated matrix column, negated objective, and the
    negation-swapped box.  Optionally plants negated duplicate rows."""
    if mirrors >= cols:
        raise ValueError("need a base column per mirror")
    rng = random.Random(seed)
    base_cols = cols - mirrors
    col_data: List[List[Tuple[int, int]]] = []
    for w in range(base_cols):
        nnz = rng.randint(1, min(3, rows))
        chosen = rng.sample(range(rows), nnz)
        col_data.append([(v, rng.choice([-2, -1, 1, 2, 3])) for v in sorted(chosen)])
    lower: List[Rational] = [rng.randint(-2, 0) for _ in range(base_cols)]
    upper = [lo + rng.randint(1, 4) for lo in lower]
    objective = [rng.choice([1, 2, 3]) for _ in range(base_cols)]
    mirror_pairs: List[List[int]] = []
    for k in range(mirrors):
        src = rng.randrange(base_cols)
        w = base_cols + k
        col_data.append([(v, -a) for v, a in col_data[src]])
        lower.append(normalize(-upper[src]))
        upper.append(normalize(-lower[src]))
        objective.append(normalize(-objective[src]))
        mirror_pairs.append([src, w])
    entries = []
    for w, col in enumerate(col_data):
        for v, a in col:
            entries.append((v, w, a))
    mat = SparseMatrix.from_entries(rows, cols, entries)
    x_hat = _feasible_box_point(rng, lower, upper)
    rhs = [normalize(sum(a * x_hat[w] for w, a in mat.rows[v].items()))
           for v in range(rows)]

    if negated_row_pairs:
        for k in range(min(negated_row_pairs, rows)):
            src = rng.randrange(rows)
            new_mat = SparseMatrix(mat.nrows + 1, cols)
            for v in range(mat.nrows):
                for w, a in mat.rows[v].items():
                    new_mat.set_entry(v, w, a)
            for w, a in mat.rows[src].items():
                new_mat.set_entry(mat.nrows, w, -a)
            rhs.append(normalize(-rhs[src]))
            mat = new_mat
    problem = Problem(
        matrix=mat, rhs=rhs, lower=lower, upper=upper, objective=objective,
        row_sense=[RowSense.EQ] * mat.nrows, name=name,
    )
    truth = {
        "kind": "reflect-random",
        "seed": seed,
        "mirror_pairs": [[problem.col_names[a], problem.col_names[b]]
                         for a, b in mirror_pairs],
        "has_sign_flip": bool(mirror_pairs),
        "witness_point": [str(v) for v in x_hat],
    }
    return problem, truth


def gen_scaling_instance(target_nnz: int, seed: int) -> Problem:
    """dup-random sized so the matrix carries roughly target_nnz nonzeros
    (used by the refinement scaling check)."""
    cols = max(8, target_nnz // 2)
    rows = max(4, cols // 2)
    problem, _ = gen_dup_random(rows, cols, max(1, cols // 5), seed,
                                name=f"scale{target_nnz}")
    return problem
