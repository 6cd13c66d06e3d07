"""Numerical tolerances used across the package, gathered in one record."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    svd_residual: float = 1e-10
    rank_threshold: float = 1e-12
    tridiag_residual: float = 1e-10
    cubic_residual: float = 1e-14
    root_tol: float = 1e-15
    bracket_doublings: int = 60
    feasibility: float = 1e-10
    degenerate_branch: float = 1e-14
    kkt: float = 1e-10
    admm_tol: float = 1e-8
    admm_max_iters: int = 10_000
    newton_tol: float = 1e-12
    newton_max_iters: int = 100
    linesearch_max_shrinks: int = 60
    max_iters: int = 50_000


TOL = Tolerances()


def set_tolerances(**overrides):
    """Replace the module-wide tolerance record; returns the previous one."""
    global TOL
    old = TOL
    TOL = replace(TOL, **overrides)
    return old


def get_tolerances():
    return TOL
