"""Subtask discovery in multitask linearly-solvable MDPs."""

from ._core import (
    Error,
    InvalidInput,
    NumericalError,
    __version__,
    assignment_purity,
    beta_divergence,
    boundary_score,
    build_domain,
    circular_spread,
    domain_regions,
    elbow,
    nmf,
    nnls,
    run_cli,
    select_k,
    solve,
    solve_task_basis,
    subtask_distance,
    validate,
)

__all__ = [
    "Error",
    "InvalidInput",
    "NumericalError",
    "__version__",
    "assignment_purity",
    "beta_divergence",
    "boundary_score",
    "build_domain",
    "circular_spread",
    "domain_regions",
    "elbow",
    "nmf",
    "nnls",
    "run_cli",
    "select_k",
    "solve",
    "solve_task_basis",
    "subtask_distance",
    "validate",
]
