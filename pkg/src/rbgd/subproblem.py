"""Solvers for the Bregman direction subproblems.

Tangent-constrained step (retraction-based methods)::

    min_{v in T_x M}  <grad f(x), v> + gamma * D_h(x + v, x) + g(x + v)

Unconstrained step (projection-based methods, g = 0)::

    min_{v in R^n}  <P_T grad f(x), v> + gamma * D_h(x + v, x)

With g = 0 both reduce to ``min <c, v> + h(x + v)`` where
``c = grad f(x) / gamma - grad h(x)``; every closed form below works on that
``c``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import config
from .errors import DomainError, InexactSolveError, InfeasibleSubproblemError
from .manifolds import ManifoldPoint, Sphere, TangentVector
from .numerics import bracketed_scalar_root, fro, positive_cubic_root


@dataclass(frozen=True)
class NonsmoothTerm:
    """g(x) = mu * ||x||_1."""

    mu: float
    kind: str = "l1"

    def __post_init__(self):
        if self.kind != "l1":
            raise ValueError(f"unsupported nonsmooth term {self.kind!r}")
        if self.mu < 0:
            raise ValueError("l1 weight must be non-negative")

    def value(self, x):
        return self.mu * float(np.sum(np.abs(x)))

    def prox(self, z, t):
        """argmin_u  t*g(u) + ||u - z||^2 / 2 (soft thresholding)."""
        thr = t * self.mu
        return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)

    def lipschitz(self, size):
        return self.mu * np.sqrt(size)

    def subgradient_distance(self, s, x, zero_tol=0.0):
        """Elementwise distance of ``s`` to the subdifferential at ``x``."""
        on = np.abs(x) > zero_tol
        dist = np.where(on, np.abs(s - self.mu * np.sign(x)),
                        np.maximum(np.abs(s) - self.mu, 0.0))
        return float(np.linalg.norm(dist))


@dataclass(frozen=True)
class SubproblemSpec:
    base: ManifoldPoint
    euclid_grad: np.ndarray
    gamma: float
    h: object
    g: Optional[NonsmoothTerm] = None
    constrained: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.g is not None and not self.constrained:
            raise ValueError("a nonsmooth term requires the tangent-constrained subproblem")

    @property
    def manifold(self):
        return self.base.manifold

    def tangent(self, W):
        return self.manifold._tangent(self.base, W)

    def c(self):
        return self.euclid_grad / self.gamma - self.h.grad(self.base.value)


@dataclass(frozen=True)
class SubproblemSolution:
    direction: object
    kkt_residual: float
    solver_used: str
    inner_iterations: int = 0
    multiplier: Optional[np.ndarray] = None

    @property
    def value(self):
        d = self.direction
        return d.value if isinstance(d, TangentVector) else d


# ------------------------------------------------------------ certificates

def kkt_residual(spec, v):
    """Stationarity residual of a candidate direction, recomputed from scratch.

    Constrained, g = 0:  ||P_T(c + grad h(x + v))||.
    Unconstrained:       ||grad h(x + v) - grad h(x) + P_T grad f(x) / gamma||.
    """
    X = spec.base.value
    v = np.asarray(getattr(v, "value", v))
    gh = spec.h.grad(X + v)
    if spec.constrained:
        return fro(spec.tangent(spec.c() + gh))
    rgrad = spec.tangent(spec.euclid_grad)
    return fro(gh - spec.h.grad(X) + rgrad / spec.gamma)


def subproblem_objective(spec, v):
    """<grad f, v> + gamma * D_h(x + v, x) + g(x + v) - g(x)."""
    from .bregman import bregman

    X = spec.base.value
    v = np.asarray(getattr(v, "value", v))
    grad = spec.euclid_grad if spec.constrained else spec.tangent(spec.euclid_grad)
    val = float(np.vdot(grad, v)) + spec.gamma * bregman(spec.h, X + v, X).value
    if spec.g is not None:
        val += spec.g.value(X + v) - spec.g.value(X)
    return val


# ------------------------------------------------------------ closed forms

def solve_quartic_tangent(spec):
    """Closed-form tangent step for h = ||x||^4/4 + ||x||^2/2 and g = 0.

    v = -theta * P_T(c) - P_T(x), theta the positive root of
    ||P_T c||^2 theta^3 + (||P_N x||^2 + 1) theta - 1 = 0.
    """
    if spec.h.kind != "quartic" or spec.g is not None or not spec.constrained:
        raise ValueError("solve_quartic_tangent needs quartic h, no g, constrained")
    X = spec.base.value
    c = spec.c()
    Pc = spec.tangent(c)
    PX = spec.tangent(X)
    PN = X - PX
    nPc = fro(Pc)
    if nPc <= config.TOL.degenerate_branch * max(1.0, fro(c)):
        v = -PX
    else:
        theta = positive_cubic_root(nPc * nPc, float(np.vdot(PN, PN)) + 1.0)
        v = -theta * Pc - PX
    return SubproblemSolution(TangentVector(v, spec.base), kkt_residual(spec, v), "quartic")


def _log_barrier_root(c, x):
    lam_lo = float(np.max(-c / x))

    def phi(lam):
        return float(np.sum(x / (c + lam * x))) - 1.0

    # the maximizing index contributes 1/delta at lam_lo + delta, so phi(lo) >= 1
    lo = lam_lo + 0.5
    return bracketed_scalar_root(phi, lo, lo + 1.0)


def _entropy_root(c, x):
    logx = np.log(x)

    def psi(lam):
        # log of sum_i x_i exp(-c_i - lam x_i - 1); same sign as the root equation
        a = logx - c - lam * x - 1.0
        amax = np.max(a)
        return float(amax + np.log(np.sum(np.exp(a - amax))))

    k = int(np.argmax(x))
    lo = (logx[k] - c[k] - 1.0) / x[k]
    return bracketed_scalar_root(psi, lo, lo + 1.0)


def solve_sphere_scalar(spec):
    """Sphere with log-barrier or entropy h: reduce to a scalar root in the multiplier."""
    if not isinstance(spec.manifold, Sphere):
        raise ValueError("solve_sphere_scalar needs the sphere")
    if spec.h.kind not in ("log_barrier", "entropy") or spec.g is not None:
        raise ValueError("solve_sphere_scalar needs log_barrier/entropy h and no g")
    x = spec.base.value
    c = spec.c()
    if spec.h.kind == "log_barrier":
        lam = _log_barrier_root(c, x)
        denom = c + lam * x
        if not np.all(denom > 0):
            i = int(np.flatnonzero(~(denom > 0))[0])
            raise InfeasibleSubproblemError(
                f"log-barrier step leaves the positive orthant at index {i}")
        v = 1.0 / denom - x
    else:
        lam = _entropy_root(c, x)
        v = np.exp(-c - lam * x - 1.0) - x
    if not np.all(np.isfinite(v)):
        raise InfeasibleSubproblemError("non-finite scalar-root step")
    return SubproblemSolution(TangentVector(v, spec.base), kkt_residual(spec, v),
                              f"sphere_{spec.h.kind}")


# ---------------------------------------------------------- inner Newton

def _projected_cg(apply_A, b, P, tol, max_iter):
    d = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rr = float(np.vdot(r, r))
    stop = tol * tol * max(rr, 1e-300)
    for _ in range(max_iter):
        if rr <= stop:
            break
        Ap = P(apply_A(p))
        pAp = float(np.vdot(p, Ap))
        if pAp <= 0:
            break
        a = rr / pAp
        d += a * p
        r -= a * Ap
        rr_new = float(np.vdot(r, r))
        p = r + (rr_new / rr) * p
        rr = rr_new
    return d


def _damped_newton(obj, grad, hess_vec, v0, P, scale):
    """Minimize a smooth strongly convex function over the range of ``P``.

    ``obj`` raises DomainError outside its domain; such trial steps are
    halved like an Armijo failure.
    """
    tol = config.TOL.newton_tol
    v = v0
    f = obj(v)
    n = v.size
    for it in range(1, config.TOL.newton_max_iters + 1):
        G = P(grad(v))
        gn = fro(G)
        if gn <= tol * scale:
            return v, it - 1, gn
        d = _projected_cg(lambda w: hess_vec(v, w), -G, P, 1e-12, min(n, 500))
        slope = float(np.vdot(G, d))
        if slope >= 0:
            d, slope = -G, -gn * gn
        t = 1.0
        while True:
            try:
                f_new = obj(v + t * d)
                if f_new <= f + 1e-4 * t * slope:
                    break
            except DomainError:
                pass
            t *= 0.5
            if t < 1e-20:
                raise InexactSolveError("damped Newton line search failed",
                                        {"grad_norm": gn})
        v = v + t * d
        f = f_new
    G = P(grad(v))
    gn = fro(G)
    if gn <= tol * scale * 10:
        return v, config.TOL.newton_max_iters, gn
    raise InexactSolveError("damped Newton hit its iteration cap", {"grad_norm": gn})


# ------------------------------------------------------------ splitting

def _quartic_vstep(spec, e, PX, nPN2, rho):
    # minimizer over T of <e, v> + gamma h(x+v) + rho/2 ||x+v||^2 (radial argument)
    d = spec.tangent(e)
    b = spec.gamma * (nPN2 + 1.0) + rho
    k = spec.gamma * float(np.vdot(d, d))
    if k == 0.0:
        return -PX
    theta = positive_cubic_root(k / b ** 3, 1.0)
    t = b / theta
    return -d / t - PX


def solve_generic_constrained(spec):
    """Tangent-constrained step with a nonsmooth term or a non-closed-form h.

    Alternating-direction splitting with consensus ``z = x + v``:
    the v-update is smooth and strongly convex on the tangent space, the
    z-update is the prox of g, and the penalty is adapted by residual
    balancing.  The returned ``multiplier`` is an element of the
    subdifferential of g at the final z.
    """
    if not spec.constrained:
        raise ValueError("solve_generic_constrained needs the constrained subproblem")
    tol_cfg = config.TOL
    X = spec.base.value
    h, g, gamma = spec.h, spec.g, spec.gamma
    P = spec.tangent
    gradf = spec.euclid_grad
    ghX = h.grad(X)
    PX = P(X)
    nPN2 = float(np.vdot(X - PX, X - PX))
    scale = max(1.0, fro(X))
    tol = tol_cfg.admm_tol * scale

    rho = gamma * h.lam
    v = np.zeros_like(X)
    z = X.copy()
    y = np.zeros_like(X)
    rp = rd = np.inf
    for it in range(1, tol_cfg.admm_max_iters + 1):
        a = gradf + y - gamma * ghX
        if h.kind == "quartic":
            v = _quartic_vstep(spec, a - rho * z, PX, nPN2, rho)
        elif h.kind == "quadratic":
            v = -P(a - rho * z) / (gamma + rho) - PX
        else:
            zz, rr_ = z, rho

            def obj(w):
                return (float(np.vdot(a, w)) + gamma * h.value(X + w)
                        + 0.5 * rr_ * float(np.vdot(X + w - zz, X + w - zz)))

            def grd(w):
                return a + gamma * h.grad(X + w) + rr_ * (X + w - zz)

            def hv(w, dvec):
                return gamma * h.hess_vec(X + w, dvec) + rr_ * dvec

            v, _, _ = _damped_newton(obj, grd, hv, v, P, max(1.0, fro(a)))
        xv = X + v
        z_old = z
        w = xv + y / rho
        z = w if g is None else g.prox(w, 1.0 / rho)
        y = y + rho * (xv - z)
        rp = fro(xv - z)
        rd = rho * fro(P(z - z_old))
        if rp <= tol and rd <= tol:
            break
        if rp > 10.0 * rd:
            rho *= 2.0
        elif rd > 10.0 * rp:
            rho *= 0.5
    else:
        raise InexactSolveError(
            "splitting solver hit its iteration cap",
            {"primal": rp, "dual": rd, "iterations": tol_cfg.admm_max_iters})
    stat = fro(P(gradf + gamma * (h.grad(X + v) - ghX) + y)) / gamma
    sub = 0.0 if g is None else g.subgradient_distance(y, z) / gamma
    kkt = max(stat, sub, rp)
    return SubproblemSolution(TangentVector(v, spec.base), kkt, "splitting", it, multiplier=y)


# ------------------------------------------------------------ unconstrained

def solve_unconstrained(spec):
    """Ambient-space Bregman step driven by the Riemannian gradient."""
    if spec.constrained or spec.g is not None:
        raise ValueError("solve_unconstrained needs constrained=False and no g")
    X = spec.base.value
    h, gamma = spec.h, spec.gamma
    rgrad = spec.tangent(spec.euclid_grad)
    iters = 0
    if h.kind == "quartic":
        cp = rgrad / gamma - h.grad(X)
        theta = positive_cubic_root(float(np.vdot(cp, cp)), 1.0)
        v = -theta * cp - X
        used = "quartic"
    elif h.kind == "quadratic":
        v = -rgrad / gamma
        used = "quadratic"
    else:
        cvec = rgrad / gamma - h.grad(X)

        def obj(w):
            return float(np.vdot(cvec, w)) + h.value(X + w)

        def grd(w):
            return cvec + h.grad(X + w)

        def hv(w, d):
            return h.hess_vec(X + w, d)

        v, iters, _ = _damped_newton(obj, grd, hv, np.zeros_like(X), lambda W: W,
                                     max(1.0, fro(cvec)))
        used = "newton"
    return SubproblemSolution(v, kkt_residual(spec, v), used, iters)


def solve_quadratic_tangent(spec):
    """h = ||x||^2/2 and g = 0: the projected gradient step -P_T(grad f)/gamma."""
    if spec.h.kind != "quadratic" or spec.g is not None or not spec.constrained:
        raise ValueError("solve_quadratic_tangent needs quadratic h, no g, constrained")
    v = -spec.tangent(spec.euclid_grad) / spec.gamma
    return SubproblemSolution(TangentVector(v, spec.base), kkt_residual(spec, v), "quadratic")


def solve(spec):
    """Dispatch: closed forms (quartic, quadratic), sphere scalar root, then splitting."""
    if not spec.constrained:
        return solve_unconstrained(spec)
    if spec.g is None and spec.h.kind == "quartic":
        return solve_quartic_tangent(spec)
    if spec.g is None and spec.h.kind == "quadratic":
        return solve_quadratic_tangent(spec)
    if (spec.g is None and isinstance(spec.manifold, Sphere)
            and spec.h.kind in ("log_barrier", "entropy")):
        return solve_sphere_scalar(spec)
    return solve_generic_constrained(spec)
