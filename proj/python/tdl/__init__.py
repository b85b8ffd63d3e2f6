"""Return-map bifurcation toolkit: Python bindings to the C++ core."""

from ._core import (
    ConvergenceError,
    DomainError,
    NotFoundError,
    __version__,
    classify_horn,
    cusp_asymptotic,
    find_cusp,
    find_turning,
    ls_3dl_locus,
    ls_eigenvalues,
    mu1_axis_intersection,
    run_cli,
    scalar_map,
)

__all__ = [
    "ConvergenceError",
    "DomainError",
    "NotFoundError",
    "__version__",
    "classify_horn",
    "cusp_asymptotic",
    "find_cusp",
    "find_turning",
    "ls_3dl_locus",
    "ls_eigenvalues",
    "mu1_axis_intersection",
    "run_cli",
    "scalar_map",
]
