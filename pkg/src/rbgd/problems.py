"""Benchmark objectives: a discretized nonlinear eigenvalue problem and
low-rank quadratic sensing, plus a minibatch gradient oracle.

Every problem exposes ``value(X)``, ``grad(X)`` (Euclidean gradient of the
smooth part), ``value_and_grad(X)`` and a ``nonsmooth`` attribute that is
either ``None`` or a :class:`~rbgd.subproblem.NonsmoothTerm`.
"""
import base64
import json

import numpy as np

from . import _kernels
from .numerics import Tridiagonal, make_rng


class Problem:
    nonsmooth = None
    shape = None

    def value(self, X):
        raise NotImplementedError

    def grad(self, X):
        raise NotImplementedError

    def value_and_grad(self, X):
        return self.value(X), self.grad(X)

    def value_change(self, X, Y):
        """f(Y) - f(X).  Subclasses override this with a form that does not
        lose the difference to rounding when Y is close to X."""
        return self.value(Y) - self.value(X)

    def total_value(self, X):
        """F = f + g."""
        f = self.value(X)
        if self.nonsmooth is not None:
            f += self.nonsmooth.value(X)
        return f


class NepvProblem(Problem):
    """f(X) = tr(X^T L X)/2 + (beta/4) rho^T L^{-1} rho,  rho = diag(X X^T).

    L is the m x m Dirichlet Laplacian (2 on the diagonal, -1 off it); it is
    nonsingular, so its pseudo-inverse is applied by a tridiagonal solve.
    """

    def __init__(self, m, p, beta=10.0):
        if not (m >= p >= 1):
            raise ValueError("nepv needs m >= p >= 1")
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.m, self.p, self.beta = int(m), int(p), float(beta)
        self.L = Tridiagonal.laplacian(self.m)
        self.shape = (self.m, self.p)

    def _parts(self, X):
        rho = _kernels.row_sq_norms(X)
        w = self.L.solve(rho)
        LX = self.L.matmul(X)
        return rho, w, LX

    def value(self, X):
        rho, w, LX = self._parts(X)
        return 0.5 * float(np.vdot(X, LX)) + 0.25 * self.beta * float(rho @ w)

    def grad(self, X):
        _, w, LX = self._parts(X)
        return LX + self.beta * w[:, None] * X

    def value_and_grad(self, X):
        rho, w, LX = self._parts(X)
        f = 0.5 * float(np.vdot(X, LX)) + 0.25 * self.beta * float(rho @ w)
        return f, LX + self.beta * w[:, None] * X

    def value_change(self, X, Y):
        # tr(Y'LY) - tr(X'LX) = <Y - X, L(Y + X)>, and likewise for the
        # rho'L^{-1}rho term with rho_Y - rho_X = rowwise <Y - X, Y + X>
        D = Y - X
        S = Y + X
        drho = np.einsum("ij,ij->i", D, S)
        srho = _kernels.row_sq_norms(X) + _kernels.row_sq_norms(Y)
        quad = 0.5 * float(np.vdot(D, self.L.matmul(S)))
        return quad + 0.25 * self.beta * float(drho @ self.L.solve(srho))

    def to_dict(self):
        return {"kind": "nepv", "m": self.m, "p": self.p, "beta": self.beta}


class SensingProblem(Problem):
    """f(X) = (1/2) sum_j (||X^T y_j||^2 - c_j)^2 with rows y_j of ``Y``."""

    def __init__(self, Y, c, X_star=None, seed=None):
        self.Y = np.ascontiguousarray(Y, dtype=np.float64)
        self.c = np.asarray(c, dtype=np.float64)
        self.X_star = X_star
        self.seed = seed
        self.N, self.m = self.Y.shape
        if self.c.shape != (self.N,):
            raise ValueError("need one target per measurement")
        self.r = None if X_star is None else X_star.shape[1]
        self.shape = None if X_star is None else X_star.shape

    def residuals(self, X):
        Z = self.Y @ X
        return _kernels.row_sq_norms(Z) - self.c, Z

    def value(self, X):
        res, _ = self.residuals(X)
        return 0.5 * float(res @ res)

    def value_change(self, X, Y):
        ZX = self.Y @ X
        ZD = self.Y @ (Y - X)
        ZS = 2.0 * ZX + ZD
        dres = np.einsum("ij,ij->i", ZD, ZS)
        sres = (_kernels.row_sq_norms(ZX) - self.c) + (_kernels.row_sq_norms(ZX + ZD) - self.c)
        return 0.5 * float(dres @ sres)

    def _grad_sum(self, X, idx=None, weight=1.0):
        # weight * 2 * sum_{j in idx} r_j y_j y_j^T X; idx=None means all rows
        if idx is None:
            Y, c = self.Y, self.c
        else:
            Y, c = self.Y[idx], self.c[idx]
        Z = Y @ X
        res = _kernels.row_sq_norms(Z) - c
        return (2.0 * weight) * (Y.T @ (res[:, None] * Z))

    def grad(self, X):
        return self._grad_sum(X)

    def value_and_grad(self, X):
        res, Z = self.residuals(X)
        return 0.5 * float(res @ res), 2.0 * (self.Y.T @ (res[:, None] * Z))

    def per_sample_grad(self, X, j):
        """Gradient of f_j(X) = (N/2)(||X^T y_j||^2 - c_j)^2; averages to grad f."""
        return self._grad_sum(X, np.array([j]), float(self.N))

    def recovery_error(self, X):
        if self.X_star is None:
            return float("nan")
        G = self.X_star @ self.X_star.T
        return float(np.linalg.norm(X @ X.T - G) / np.linalg.norm(G))

    def to_dict(self, include_arrays=False):
        d = {"kind": "sensing", "m": self.m, "r": self.r, "N": self.N, "seed": self.seed}
        if include_arrays or self.seed is None:
            for name in ("Y", "c", "X_star"):
                arr = getattr(self, name)
                if arr is not None:
                    d[name] = {"shape": list(arr.shape),
                               "data": base64.b64encode(np.ascontiguousarray(arr).tobytes())
                               .decode("ascii")}
        return d


def generate_sensing(m, r, N, rng):
    """Gaussian design rows y_j, Gaussian ground truth X_*, c_j = ||X_*^T y_j||^2."""
    if not (m >= r >= 1 and N >= 1):
        raise ValueError("sensing needs m >= r >= 1 and N >= 1")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = make_rng(seed)
    Y = rng.standard_normal((N, m))
    X_star = rng.standard_normal((m, r))
    c = _kernels.row_sq_norms(Y @ X_star)
    return SensingProblem(Y, c, X_star, seed=seed)


class MinibatchOracle:
    """Unbiased minibatch gradients of a :class:`SensingProblem`.

    Indices are drawn i.i.d. uniform with replacement.  ``enumerate_all``
    replaces sampling by the full index set (a test hook: the estimate then
    equals the full gradient exactly).
    """

    def __init__(self, base, rng, enumerate_all=False):
        self.base = base
        self.rng = make_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        self.enumerate_all = enumerate_all

    def draw(self, batch):
        return self.rng.integers(0, self.base.N, size=batch)

    def grad(self, X, batch):
        if batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.enumerate_all:
            return self.base._grad_sum(X)
        idx = self.draw(batch)
        return self.base._grad_sum(X, idx, self.base.N / batch)


def minibatch_grad(oracle, X, batch):
    return oracle.grad(X, batch)


def nepv_value(P, X):
    return P.value(X)


def nepv_grad(P, X):
    return P.grad(X)


def sensing_value(P, X):
    return P.value(X)


def sensing_grad(P, X):
    return P.grad(X)


class CompositeProblem(Problem):
    """A smooth problem plus a nonsmooth term g."""

    def __init__(self, smooth, nonsmooth):
        self.smooth = smooth
        self.nonsmooth = nonsmooth
        self.shape = smooth.shape

    def value(self, X):
        return self.smooth.value(X)

    def grad(self, X):
        return self.smooth.grad(X)

    def value_and_grad(self, X):
        return self.smooth.value_and_grad(X)

    def value_change(self, X, Y):
        return self.smooth.value_change(X, Y)


def problem_from_dict(d):
    kind = d["kind"]
    if kind == "nepv":
        return NepvProblem(d["m"], d["p"], d.get("beta", 10.0))
    if kind == "sensing":
        if d.get("seed") is not None and "Y" not in d:
            return generate_sensing(d["m"], d["r"], d.get("N", 100), int(d["seed"]))

        def arr(name):
            e = d[name]
            return np.frombuffer(base64.b64decode(e["data"]), dtype=np.float64).reshape(e["shape"])

        return SensingProblem(arr("Y"), arr("c"), arr("X_star") if "X_star" in d else None,
                              seed=d.get("seed"))
    raise ValueError(f"unknown problem kind {kind!r}")


def dump_problem(problem, path, include_arrays=False):
    d = problem.to_dict(include_arrays) if isinstance(problem, SensingProblem) else problem.to_dict()
    with open(path, "w") as fh:
        json.dump(d, fh, indent=2)


def load_problem(path):
    with open(path) as fh:
        return problem_from_dict(json.load(fh))
