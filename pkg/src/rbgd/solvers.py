"""Outer loops: Riemannian Bregman gradient methods and steepest-descent baselines.

Methods
-------
R_RBGD     retraction-based, tangent-constrained Bregman step + backtracking
P_RBGD     projection-based, unconstrained Bregman step, u_t = 0
P_RBGD_C   as P_RBGD with the normal correction u_t = -P_N(v_t)
S_R_RBGD   stochastic retraction-based, fixed stepsize
S_P_RBGD   stochastic projection-based, fixed stepsize, u_t = 0
RSD        Riemannian steepest descent, Armijo backtracking
RSD_ADA    RSD with an adaptive initial stepsize
"""
import csv
import hashlib
import io
import time
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from . import config as _cfg
from .bregman import ReferenceFunction
from .errors import (
    DegenerateProjectionError,
    DomainError,
    InexactSolveError,
    InfeasibleSubproblemError,
    NumericalFailure,
    RootNotBracketedError,
    SingularSystemError,
)
from .manifolds import FixedRank
from .numerics import fro, make_rng
from .subproblem import SubproblemSpec, solve, solve_unconstrained

METHODS = ("R_RBGD", "P_RBGD", "P_RBGD_C", "S_R_RBGD", "S_P_RBGD", "RSD", "RSD_ADA")
DETERMINISTIC_BREGMAN = ("R_RBGD", "P_RBGD", "P_RBGD_C")
STOCHASTIC = ("S_R_RBGD", "S_P_RBGD")
BASELINES = ("RSD", "RSD_ADA")

# Failures of a trial point that the linesearch treats as "step too long".
_TRIAL_ERRORS = (DomainError, DegenerateProjectionError, SingularSystemError, NumericalFailure)
_NUMERICAL_ERRORS = _TRIAL_ERRORS + (InexactSolveError, InfeasibleSubproblemError,
                                     RootNotBracketedError, FloatingPointError)

RSD_SUFFICIENT_DECREASE = 1e-4
RSD_CONTRACTION = 0.5


def normalize_method(name):
    key = name.upper().replace("-", "_")
    if key == "P_BRGD_C":
        key = "P_RBGD_C"
    if key not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return key


@dataclass
class SolverConfig:
    method: str
    gamma: float = 1.0
    rho: float = 0.5
    alpha0: float = 0.5
    tau: float = 1.0
    max_iters: int = 50_000
    grad_tol: float = 1e-4
    batch_size: Optional[int] = None
    fixed_alpha: Optional[float] = None
    seed: int = 0
    reference: str = "quartic"
    max_shrinks: int = 60
    record_timing: bool = True

    def __post_init__(self):
        self.method = normalize_method(self.method)
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.gamma < 0 or (self.method not in BASELINES and not self.gamma > 0):
            raise ValueError("gamma must be positive for Bregman methods")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.method in STOCHASTIC and not (self.fixed_alpha and self.fixed_alpha > 0):
            raise ValueError("stochastic methods need a positive fixed_alpha")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def reference_function(self):
        return ReferenceFunction(self.reference)

    def to_dict(self):
        return asdict(self)


@dataclass
class IterationRecord:
    t: int
    f_value: float
    g_value: float
    grad_norm: Optional[float]
    direction_norm: float
    alpha: float
    linesearch_trials: int
    domain_failures: int
    wall_ns: int
    zeta_sq_avg: Optional[float] = None

    @property
    def F(self):
        return self.f_value + self.g_value


STATUSES = ("Converged", "MaxIters", "LinesearchFailure", "NumericalError")


@dataclass
class RunReport:
    config: SolverConfig
    records: List[IterationRecord] = field(default_factory=list)
    status: str = "MaxIters"
    lam: float = 1.0
    feasibility: float = float("nan")
    checksum: str = ""
    message: str = ""
    final_point: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def iterations(self):
        """Number of accepted steps."""
        return max(len(self.records) - 1, 0) if self.status == "Converged" else len(self.records)

    @property
    def final(self):
        return self.records[-1] if self.records else None

    def summary(self):
        last = self.final
        return {
            "method": self.config.method,
            "seed": self.config.seed,
            "status": self.status,
            "final_F": None if last is None else last.F,
            "final_grad_norm": None if last is None else last.grad_norm,
            "final_direction_norm": None if last is None else last.direction_norm,
            "iterations": self.iterations,
            "wall_s": None if last is None else last.wall_ns * 1e-9,
            "feasibility": self.feasibility,
            "checksum": self.checksum,
        }

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "summary": self.summary(),
            "lam": self.lam,
            "message": self.message,
            "records": [asdict(r) for r in self.records],
        }

    def csv_text(self, timing=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "F", "grad_norm", "v_norm", "alpha", "ls_trials", "wall_ns"])
        for r in self.records:
            w.writerow([r.t, _fmt(r.F), _fmt(r.grad_norm), _fmt(r.direction_norm),
                        _fmt(r.alpha), r.linesearch_trials, r.wall_ns if timing else 0])
        return buf.getvalue()


def _fmt(x):
    return "" if x is None else repr(float(x))


def descent_violations(report, slack=1e-9):
    """Accepted steps that break F(x+) - F(x) <= -(gamma*lam*alpha/4)||v||^2 beyond slack."""
    cfg = report.config
    bad = []
    recs = report.records
    for cur, nxt in zip(recs, recs[1:]):
        bound = -(cfg.gamma * report.lam * cur.alpha / 4.0) * cur.direction_norm ** 2
        if nxt.F - cur.F > bound + slack * max(1.0, abs(cur.F)):
            bad.append(cur.t)
    return bad


def _digest(report, manifold, X):
    report.final_point = X
    report.feasibility = float(manifold.feasibility_residual(X))
    report.checksum = hashlib.sha256(np.ascontiguousarray(X).tobytes()).hexdigest()[:16]


def initial_point(manifold, seed):
    return manifold.random_point(make_rng(seed))


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled
        self.t0 = time.perf_counter_ns()

    def __call__(self):
        return time.perf_counter_ns() - self.t0 if self.enabled else 0


def _g_value(problem, X):
    return 0.0 if problem.nonsmooth is None else problem.nonsmooth.value(X)


def _start(manifold, config, x0):
    if x0 is None:
        return initial_point(manifold, config.seed)
    if hasattr(x0, "manifold"):
        return x0
    return manifold.point(x0)


# ----------------------------------------------------------- Bregman loops

def _run_bregman(problem, manifold, h, config, x0, projection):
    if projection and problem.nonsmooth is not None:
        raise ValueError("projection-based methods need a smooth problem (g = 0)")
    gamma, lam = config.gamma, h.lam
    report = RunReport(config=config, lam=lam)
    clock = _Clock(config.record_timing)
    smooth = problem.nonsmooth is None
    x = _start(manifold, config, x0)
    X = x.value
    f = problem.value(X)
    gval = _g_value(problem, X)
    correct = config.method == "P_RBGD_C"
    for t in range(config.max_iters + 1):
        try:
            egrad = problem.grad(X)
            rgrad = manifold._tangent(x, egrad)
            gn = fro(rgrad)
            spec = SubproblemSpec(x, egrad, gamma, h, problem.nonsmooth,
                                  constrained=not projection)
            sol = solve_unconstrained(spec) if projection else solve(spec)
        except _NUMERICAL_ERRORS as exc:
            report.status, report.message = "NumericalError", f"{type(exc).__name__}: {exc}"
            break
        v = sol.value
        vn = fro(v)
        done = gn <= config.grad_tol if smooth else vn <= config.grad_tol
        rec = IterationRecord(t, f, gval, gn if smooth else None, vn, 0.0, 0, 0, clock())
        report.records.append(rec)
        if done:
            report.status = "Converged"
            break
        if t == config.max_iters:
            report.status = "MaxIters"
            break
        step = v
        if correct:
            vN = v - manifold._tangent(x, v)
            nN = fro(vN)
            scale = 1.0 if nN <= config.tau * vn else config.tau * vn / nN
            step = v - scale * vN

        def trial(alpha):
            if projection:
                return manifold.project_manifold(X + alpha * step)
            return manifold.retract(x, alpha * step)

        alpha = config.fixed_alpha if config.fixed_alpha else config.alpha0
        accepted = None
        for k in range(config.max_shrinks + 1):
            rec.linesearch_trials += 1
            try:
                x_new = trial(alpha)
                g_new = _g_value(problem, x_new.value)
                if config.fixed_alpha:
                    accepted = (x_new, problem.value(x_new.value), g_new)
                    break
                dF = problem.value_change(X, x_new.value) + (g_new - gval)
                if dF <= -(gamma * lam * alpha / 4.0) * vn * vn:
                    accepted = (x_new, problem.value(x_new.value), g_new)
                    break
            except _TRIAL_ERRORS:
                rec.domain_failures += 1
                if config.fixed_alpha:
                    break
            alpha *= config.rho
        if accepted is None:
            report.status = "NumericalError" if config.fixed_alpha else "LinesearchFailure"
            report.message = f"no acceptable step at t={t}"
            break
        rec.alpha = alpha
        x, f, gval = accepted
        X = x.value
    _digest(report, manifold, X)
    return report


def run_r_rbgd(problem, manifold, h, config, x0=None):
    """Retraction-based Riemannian Bregman gradient method."""
    return _run_bregman(problem, manifold, h, config, x0, projection=False)


def run_p_rbgd(problem, manifold, h, config, x0=None):
    """Projection-based method; P_RBGD_C adds the normal correction."""
    return _run_bregman(problem, manifold, h, config, x0, projection=True)


# ------------------------------------------------------------- stochastic

def sampling_rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed)).spawn(1)[0]))


def run_stochastic(problem, manifold, h, config, oracle=None, x0=None):
    """Minibatch variants with a fixed stepsize.

    ``config.batch_size=None`` uses the full gradient (the enumeration hook of
    the oracle), which reproduces the deterministic fixed-step trajectory.
    """
    from .problems import MinibatchOracle

    if config.method not in STOCHASTIC:
        raise ValueError(f"{config.method} is not a stochastic method")
    if not manifold.compact:
        raise ValueError("stochastic methods need a compact manifold (sphere or Stiefel)")
    if oracle is None:
        oracle = MinibatchOracle(problem, sampling_rng(config.seed),
                                 enumerate_all=config.batch_size is None)
    batch = config.batch_size or getattr(problem, "N", 1)
    projection = config.method == "S_P_RBGD"
    gamma, alpha = config.gamma, config.fixed_alpha
    report = RunReport(config=config, lam=h.lam)
    clock = _Clock(config.record_timing)
    x = _start(manifold, config, x0)
    X = x.value
    zeta_sum = 0.0
    for t in range(config.max_iters + 1):
        try:
            f = problem.value(X)
            gn = fro(manifold._tangent(x, problem.grad(X)))
            gb = oracle.grad(X, batch)
            spec = SubproblemSpec(x, gb, gamma, h, problem.nonsmooth, constrained=not projection)
            zeta = (solve_unconstrained(spec) if projection else solve(spec)).value
        except _NUMERICAL_ERRORS as exc:
            report.status, report.message = "NumericalError", f"{type(exc).__name__}: {exc}"
            break
        zn = fro(zeta)
        zeta_sum += zn * zn
        rec = IterationRecord(t, f, _g_value(problem, X), gn, zn, alpha, 1, 0, clock(),
                              zeta_sq_avg=zeta_sum / (t + 1))
        report.records.append(rec)
        if gn <= config.grad_tol:
            report.status = "Converged"
            rec.alpha = 0.0
            break
        if t == config.max_iters:
            report.status = "MaxIters"
            rec.alpha = 0.0
            break
        try:
            x = (manifold.project_manifold(X + alpha * zeta) if projection
                 else manifold.retract(x, alpha * zeta))
        except _TRIAL_ERRORS as exc:
            rec.domain_failures = 1
            report.status = "NumericalError"
            report.message = f"step left the domain at t={t}: {exc}"
            break
        X = x.value
    _digest(report, manifold, X)
    return report


# -------------------------------------------------------------- baselines

def run_rsd(problem, manifold, config, x0=None):
    """Riemannian steepest descent with Armijo backtracking.

    RSD:     each linesearch starts at twice the previous accepted step.
    RSD_ADA: starts at twice the previous step only when that step was
             accepted on its first trial, otherwise at the previous step.
    The first iteration starts at 1/||grad f||.
    """
    if problem.nonsmooth is not None:
        raise ValueError("steepest descent needs a smooth problem")
    adaptive = config.method == "RSD_ADA"
    report = RunReport(config=config, lam=1.0)
    clock = _Clock(config.record_timing)
    x = _start(manifold, config, x0)
    X = x.value
    f = problem.value(X)
    prev_alpha = None
    first_ok = False
    for t in range(config.max_iters + 1):
        try:
            rgrad = manifold._tangent(x, problem.grad(X))
        except _NUMERICAL_ERRORS as exc:
            report.status, report.message = "NumericalError", f"{type(exc).__name__}: {exc}"
            break
        gn = fro(rgrad)
        rec = IterationRecord(t, f, 0.0, gn, gn, 0.0, 0, 0, clock())
        report.records.append(rec)
        if gn <= config.grad_tol:
            report.status = "Converged"
            break
        if t == config.max_iters:
            report.status = "MaxIters"
            break
        if prev_alpha is None:
            alpha = 1.0 / gn
        elif adaptive:
            alpha = 2.0 * prev_alpha if first_ok else prev_alpha
        else:
            alpha = 2.0 * prev_alpha
        accepted = None
        for k in range(config.max_shrinks + 1):
            rec.linesearch_trials += 1
            try:
                x_new = manifold.retract(x, -alpha * rgrad)
                if problem.value_change(X, x_new.value) <= -RSD_SUFFICIENT_DECREASE * alpha * gn * gn:
                    accepted = (x_new, problem.value(x_new.value))
                    break
            except _TRIAL_ERRORS:
                rec.domain_failures += 1
            alpha *= RSD_CONTRACTION
        if accepted is None:
            report.status = "LinesearchFailure"
            report.message = f"no acceptable step at t={t}"
            break
        first_ok = rec.linesearch_trials == 1
        rec.alpha = prev_alpha = alpha
        x, f = accepted
        X = x.value
    _digest(report, manifold, X)
    return report


def run(problem, manifold, config, h=None, x0=None, oracle=None):
    """Dispatch on ``config.method``."""
    h = h or config.reference_function()
    m = config.method
    if m == "R_RBGD":
        return run_r_rbgd(problem, manifold, h, config, x0)
    if m in ("P_RBGD", "P_RBGD_C"):
        return run_p_rbgd(problem, manifold, h, config, x0)
    if m in STOCHASTIC:
        return run_stochastic(problem, manifold, h, config, oracle=oracle, x0=x0)
    return run_rsd(problem, manifold, config, x0)


def config_fields():
    return [f.name for f in fields(SolverConfig)]


def check_compatible(config, manifold):
    """Validation shared by the CLI: stochastic methods need compactness."""
    if config.method in STOCHASTIC and (isinstance(manifold, FixedRank) or not manifold.compact):
        raise ValueError(f"{config.method} requires a compact manifold; "
                         f"{manifold.tag} is not compact")
