"""Dense linear algebra and scalar root-finding primitives."""
import math

import numpy as np
import scipy.optimize

from . import _kernels, config
from .errors import (
    DegenerateProjectionError,
    NumericalFailure,
    RootNotBracketedError,
    SingularSystemError,
)


def make_rng(seed):
    """Seeded PCG64 generator; the same seed always yields the same stream."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def fro(A):
    return float(np.linalg.norm(A))


def inner(A, B):
    return float(np.vdot(A, B))


def svd(A):
    """Thin SVD ``A = U @ diag(s) @ V.T`` with ``s`` non-increasing.

    Wide matrices are factored through their transpose so that the LAPACK
    call always sees a tall input.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("svd expects a 2-D array")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("svd input contains non-finite entries")
    if A.shape[0] < A.shape[1]:
        V, s, U = svd(A.T)
        return U, s, V
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return U, s, Vt.T


def polar_factor(A):
    """Orthonormal polar factor ``U V^T`` of a full-column-rank matrix."""
    U, s, V = svd(A)
    if s.size == 0 or s[-1] <= config.TOL.rank_threshold * s[0]:
        raise DegenerateProjectionError(
            "polar factor of a rank-deficient matrix "
            f"(sigma_min={s[-1] if s.size else 0.0:.3e})")
    return U @ V.T


class Tridiagonal:
    """Symmetric tridiagonal matrix stored as its two diagonals."""

    def __init__(self, diag, offdiag):
        self.diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.offdiag = np.ascontiguousarray(offdiag, dtype=np.float64)
        if self.offdiag.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise ValueError("offdiag must have length len(diag) - 1")

    @classmethod
    def laplacian(cls, m):
        """The 1-D Dirichlet Laplacian: 2 on the diagonal, -1 off it."""
        return cls(np.full(m, 2.0), np.full(m - 1, -1.0))

    @property
    def size(self):
        return self.diag.shape[0]

    def matmul(self, X):
        return _kernels.tridiag_matmul(self.diag, self.offdiag, X)

    def solve(self, b):
        return solve_spd_tridiagonal(self.diag, self.offdiag, b)

    def dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def solve_spd_tridiagonal(diag, offdiag, b):
    """Thomas algorithm for a symmetric tridiagonal system.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    x = _kernels.thomas_solve(diag, offdiag, b)
    if x is None or not np.all(np.isfinite(x)):
        raise SingularSystemError("zero pivot in tridiagonal solve")
    return x


def positive_cubic_root(a, b):
    """Unique positive root of ``a*t**3 + b*t - 1`` for ``a >= 0, b >= 1``.

    The root lies in ``(0, 1]``; computed by safeguarded Newton on that
    bracket.
    """
    if a < 0 or b < 1 or not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"positive_cubic_root needs a >= 0, b >= 1 (got a={a}, b={b})")
    if a == 0.0:
        return 1.0 / b
    return _kernels.cubic_root(a, b, config.TOL.cubic_residual)


def bracketed_scalar_root(phi, lo, hi, tol=None):
    """Root of a continuous monotone scalar function on ``[lo, hi]``.

    ``lo`` is treated as a hard lower end (callers pass a point where the
    function is known to be defined).  If ``phi(lo)`` and ``phi(hi)`` share a
    sign, ``hi`` is pushed outward, doubling the bracket width each time, at
    most ``Tolerances.bracket_doublings`` times.
    """
    tol = config.TOL.root_tol if tol is None else tol
    lo, hi = float(lo), float(hi)
    if not hi > lo:
        raise ValueError("bracket needs lo < hi")
    flo, fhi = phi(lo), phi(hi)
    if flo == 0.0:
        return lo
    n_expand = config.TOL.bracket_doublings
    for k in range(n_expand + 1):
        if fhi == 0.0:
            return hi
        if np.sign(flo) != np.sign(fhi):
            break
        if k == n_expand:
            raise RootNotBracketedError(
                f"no sign change on [{lo:.6g}, {hi:.6g}] after {n_expand} doublings")
        hi = lo + 2.0 * (hi - lo)
        fhi = phi(hi)
    root = scipy.optimize.brentq(phi, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                                 maxiter=500)
    return float(root)
