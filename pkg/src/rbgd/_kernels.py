"""Hot inner loops.

Each kernel has a numba ``@njit`` version and a numpy/scipy fallback.  The
fallback is used when numba is missing or when ``RBGD_DISABLE_NUMBA=1`` is set
in the environment before import.  Both paths return the same values to
rounding; ``benchmarks/bench_kernels.py`` compares their speed.
"""
import os

import numpy as np
import scipy.linalg

_DISABLED = os.environ.get("RBGD_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by RBGD_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


# ---------------------------------------------------------------- fallbacks

def _thomas_numpy(diag, offdiag, b):
    n = diag.shape[0]
    if n == 1:
        if diag[0] == 0.0:
            return None
        return b / diag[0]
    ab = np.empty((3, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = offdiag
    ab[1] = diag
    ab[2, :-1] = offdiag
    ab[2, -1] = 0.0
    try:
        return scipy.linalg.solve_banded((1, 1), ab, b, check_finite=False)
    except np.linalg.LinAlgError:
        return None


def _tridiag_matmul_numpy(diag, offdiag, X):
    Y = diag[:, None] * X
    Y[1:] += offdiag[:, None] * X[:-1]
    Y[:-1] += offdiag[:, None] * X[1:]
    return Y


def _row_sq_norms_numpy(X):
    return np.einsum("ij,ij->i", X, X)


def _cubic_root_py(a, b, tol, max_iter):
    # a*t^3 + b*t - 1 on (0, 1]; phi(0) = -1 < 0, phi(1) = a + b - 1 >= 0
    lo, hi = 0.0, 1.0
    t = min(1.0, 1.0 / b)
    scale = max(1.0, a + b)
    for _ in range(max_iter):
        phi = (a * t * t + b) * t - 1.0
        if phi == 0.0:
            return t
        if phi < 0.0:
            lo = t
        else:
            hi = t
        dphi = 3.0 * a * t * t + b
        t_new = t - phi / dphi
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        # a small residual alone is not enough when a >> b: also require a
        # negligible Newton step (or a collapsed bracket)
        if (abs(t_new - t) <= 2e-16 * t and abs(phi) <= tol * scale) or hi - lo <= 4e-16 * hi:
            return t_new
        t = t_new
    return t


# ------------------------------------------------------------- jit versions

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _thomas_jit(diag, offdiag, b):
        n = diag.shape[0]
        ncol = b.shape[1]
        cp = np.empty(n)
        out = np.empty((n, ncol))
        dp = np.empty((n, ncol))
        piv = diag[0]
        if piv == 0.0:
            return out, False
        if n > 1:
            cp[0] = offdiag[0] / piv
        for k in range(ncol):
            dp[0, k] = b[0, k] / piv
        for i in range(1, n):
            piv = diag[i] - offdiag[i - 1] * cp[i - 1]
            if piv == 0.0:
                return out, False
            if i < n - 1:
                cp[i] = offdiag[i] / piv
            for k in range(ncol):
                dp[i, k] = (b[i, k] - offdiag[i - 1] * dp[i - 1, k]) / piv
        for k in range(ncol):
            out[n - 1, k] = dp[n - 1, k]
        for i in range(n - 2, -1, -1):
            for k in range(ncol):
                out[i, k] = dp[i, k] - cp[i] * out[i + 1, k]
        return out, True

    @njit(cache=True, nogil=True)
    def _tridiag_matmul_jit(diag, offdiag, X):
        n, p = X.shape
        Y = np.empty((n, p))
        for i in range(n):
            for k in range(p):
                acc = diag[i] * X[i, k]
                if i > 0:
                    acc += offdiag[i - 1] * X[i - 1, k]
                if i < n - 1:
                    acc += offdiag[i] * X[i + 1, k]
                Y[i, k] = acc
        return Y

    @njit(cache=True, nogil=True)
    def _row_sq_norms_jit(X):
        n, p = X.shape
        out = np.empty(n)
        for i in range(n):
            s = 0.0
            for k in range(p):
                s += X[i, k] * X[i, k]
            out[i] = s
        return out

    _cubic_root_jit = njit(cache=True, nogil=True)(_cubic_root_py)


# ------------------------------------------------------------ dispatchers

def thomas_solve(diag, offdiag, b):
    """Solve the tridiagonal system; returns ``None`` on a zero pivot."""
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    offdiag = np.ascontiguousarray(offdiag, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not HAS_NUMBA:
        return _thomas_numpy(diag, offdiag, b)
    vec = b.ndim == 1
    B = np.ascontiguousarray(b.reshape(-1, 1) if vec else b)
    out, ok = _thomas_jit(diag, offdiag, B)
    if not ok:
        return None
    return out[:, 0] if vec else out


def tridiag_matmul(diag, offdiag, X):
    """Product of a symmetric tridiagonal matrix with ``X`` (vector or matrix)."""
    X = np.asarray(X, dtype=np.float64)
    vec = X.ndim == 1
    X2 = X.reshape(-1, 1) if vec else X
    if HAS_NUMBA:
        Y = _tridiag_matmul_jit(np.ascontiguousarray(diag), np.ascontiguousarray(offdiag),
                                np.ascontiguousarray(X2))
    else:
        Y = _tridiag_matmul_numpy(diag, offdiag, X2)
    return Y[:, 0] if vec else Y


def row_sq_norms(X):
    X = np.asarray(X, dtype=np.float64)
    if HAS_NUMBA:
        return _row_sq_norms_jit(np.ascontiguousarray(X))
    return _row_sq_norms_numpy(X)


def cubic_root(a, b, tol, max_iter=200):
    if HAS_NUMBA:
        return _cubic_root_jit(float(a), float(b), float(tol), int(max_iter))
    return _cubic_root_py(float(a), float(b), float(tol), int(max_iter))

