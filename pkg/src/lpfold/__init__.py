"""lpfold: (MI)LP dimension reduction via equitable partitions, reflection
symmetries, and exact integer aggregation certified by affine TU
decompositions."""

from .model import (
    BiPartition,
    Part,
    Polarity,
    Problem,
    ReflectionReduction,
    RowSense,
    SparseMatrix,
    apply_row_partition_sum,
    lift_solution,
    project_solution,
    reduce_matrices,
    standard_form,
)
from .lpexact import LpResult, solve_lp, optimal_vertex_on_fiber
from .milpfold import (
    AtuLedger,
    FiberSpec,
    build_fiber,
    detect_milp_reduction,
    milp_initial_partition,
    milp_postsolve,
    nonternary_mask,
    recover_integral,
)
from .netmat import (
    NetworkMode,
    NetworkState,
    TuVerdict,
    augment_network,
    tu_bruteforce,
)
from .rationals import NEG_INF, POS_INF, Rational
from .refine import (
    InitialPartitionSpec,
    canonicalize_signs,
    compute_delta_center,
    refine_plain,
    refine_reflection,
    sparsify_delta,
)

__version__ = "0.1.0"

__all__ = [
    "AtuLedger", "BiPartition", "FiberSpec", "InitialPartitionSpec",
    "LpResult", "NEG_INF", "NetworkMode", "NetworkState", "POS_INF", "Part",
    "Polarity", "Problem", "Rational", "ReflectionReduction", "RowSense",
    "SparseMatrix", "TuVerdict", "apply_row_partition_sum", "augment_network",
    "build_fiber", "canonicalize_signs", "compute_delta_center",
    "detect_milp_reduction", "lift_solution", "milp_initial_partition",
    "milp_postsolve", "nonternary_mask", "optimal_vertex_on_fiber",
    "project_solution", "recover_integral", "reduce_matrices", "refine_plain",
    "refine_reflection", "solve_lp", "sparsify_delta", "standard_form",
    "tu_bruteforce",
]
