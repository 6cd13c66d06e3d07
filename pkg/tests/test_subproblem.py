import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbgd.bregman import ReferenceFunction
from rbgd.errors import InfeasibleSubproblemError
from rbgd.manifolds import FixedRank, Sphere, Stiefel
from rbgd.numerics import make_rng
from rbgd.subproblem import (
    NonsmoothTerm,
    SubproblemSpec,
    kkt_residual,
    solve,
    solve_generic_constrained,
    solve_quartic_tangent,
    solve_sphere_scalar,
    solve_unconstrained,
    subproblem_objective,
)

Q = ReferenceFunction.quartic()
H2 = ReferenceFunction.quadratic()


def bisect(phi, lo, hi, steps=300):
    flo = phi(lo)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if np.sign(phi(mid)) == np.sign(flo):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def grad_for_c(h, x, c, gamma=1.0):
    """Euclidean gradient that makes the folded vector equal to ``c``."""
    return gamma * (c + h.grad(x))


def positive_sphere_point(rng, n):
    x = rng.uniform(0.1, 1.0, n)
    return Sphere(n).point(x / np.linalg.norm(x))


# ------------------------------------------------------------ quartic

def test_quartic_sphere_example():
    M = Sphere(2)
    x = M.point(np.array([1.0, 0.0]))
    gamma = 2.5
    spec = SubproblemSpec(x, gamma * np.array([0.0, 1.0]), gamma, Q)
    np.testing.assert_allclose(spec.tangent(spec.c()), [0.0, 1.0], atol=1e-15)
    theta = bisect(lambda t: t ** 3 + 2 * t - 1, 0.0, 1.0)
    assert theta == pytest.approx(0.4533976515, abs=1e-9)
    sol = solve_quartic_tangent(spec)
    np.testing.assert_allclose(sol.value, [0.0, -theta], atol=1e-14)
    assert sol.kkt_residual < 1e-10


def test_quartic_stiefel_degenerate_branch():
    M = Stiefel(7, 3)
    x = M.random_point(make_rng(0))
    spec = SubproblemSpec(x, grad_for_c(Q, x.value, np.zeros((7, 3))), 1.0, Q)
    sol = solve_quartic_tangent(spec)
    assert np.linalg.norm(sol.value) < 1e-14


def random_spec(rng, which, h=Q, gamma=None, constrained=True):
    M = [Sphere(9), Stiefel(10, 3), FixedRank(8, 6, 2), FixedRank(12, 4, 4)][which]
    x = M.random_point(rng)
    G = rng.standard_normal(M.shape) * rng.uniform(0.1, 10)
    gamma = rng.uniform(0.2, 5.0) if gamma is None else gamma
    return SubproblemSpec(x, G, gamma, h, constrained=constrained)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2 ** 31))
def test_quartic_tangent_certificates(which, seed):
    spec = random_spec(make_rng(seed), which)
    sol = solve_quartic_tangent(spec)
    v = sol.value
    assert np.linalg.norm(spec.tangent(v) - v) <= 1e-10 * max(1.0, np.linalg.norm(v))
    assert kkt_residual(spec, v) <= 1e-10 * max(1.0, np.linalg.norm(spec.c()))
    # descent certificate of the subproblem at alpha = 1
    assert subproblem_objective(spec, v) <= -0.5 * spec.gamma * np.sum(v * v) + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2 ** 31))
def test_fixed_rank_directions_agree(which, seed):
    rng = make_rng(seed)
    spec = random_spec(rng, which)
    unc = SubproblemSpec(spec.base, spec.euclid_grad, spec.gamma, Q, constrained=False)
    vc = solve_quartic_tangent(spec).value
    vu = solve_unconstrained(unc).value
    X = spec.base.value
    assert np.linalg.norm(vc - vu) <= 1e-9 * max(1.0, np.linalg.norm(X))
    assert np.linalg.norm(vu - spec.tangent(vu)) <= 1e-10


# ------------------------------------------------------------- sphere

def test_log_barrier_uniform_zero_c():
    n = 5
    x = Sphere(n).point(np.full(n, n ** -0.5))
    h = ReferenceFunction.log_barrier()
    spec = SubproblemSpec(x, grad_for_c(h, x.value, np.zeros(n)), 1.0, h)
    sol = solve_sphere_scalar(spec)
    assert np.linalg.norm(sol.value) < 1e-12


def test_entropy_uniform_zero_c():
    n = 4
    x = Sphere(n).point(np.full(n, 0.5))
    h = ReferenceFunction.entropy()
    spec = SubproblemSpec(x, grad_for_c(h, x.value, np.zeros(n)), 1.0, h)
    sol = solve_sphere_scalar(spec)
    assert np.linalg.norm(sol.value) < 1e-12


def test_log_barrier_two_dim_example():
    x = Sphere(2).point(np.array([0.6, 0.8]))
    c = np.array([0.1, -0.2])
    h = ReferenceFunction.log_barrier()
    spec = SubproblemSpec(x, grad_for_c(h, x.value, c), 1.0, h)
    lam_lo = np.max(-c / x.value)
    lam = bisect(lambda t: np.sum(x.value / (c + t * x.value)) - 1, lam_lo + 1e-12, lam_lo + 100)
    sol = solve_sphere_scalar(spec)
    np.testing.assert_allclose(sol.value, 1.0 / (c + lam * x.value) - x.value, atol=1e-10)
    assert abs(x.value @ sol.value) < 1e-10
    assert sol.kkt_residual < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["log_barrier", "entropy"]), st.integers(2, 20), st.integers(0, 2 ** 31))
def test_sphere_scalar_certificates(kind, n, seed):
    rng = make_rng(seed)
    x = positive_sphere_point(rng, n)
    h = ReferenceFunction(kind)
    c = rng.standard_normal(n)
    spec = SubproblemSpec(x, grad_for_c(h, x.value, c), 1.0, h)
    sol = solve_sphere_scalar(spec)
    assert np.all(x.value + sol.value > 0)
    assert abs(x.value @ sol.value) <= 1e-10
    assert sol.kkt_residual <= 1e-10


def test_sphere_scalar_rejects_wrong_inputs():
    x = Sphere(3).point(np.array([0.0, 0.6, 0.8]))
    h = ReferenceFunction.log_barrier()
    with pytest.raises(Exception):
        solve_sphere_scalar(SubproblemSpec(x, np.ones(3), 1.0, h))
    y = Stiefel(3, 1).point(np.array([[0.0], [0.6], [0.8]]))
    with pytest.raises(ValueError):
        solve_sphere_scalar(SubproblemSpec(y, np.ones((3, 1)), 1.0, h))


def test_sphere_dispatch():
    rng = make_rng(9)
    x = positive_sphere_point(rng, 6)
    h = ReferenceFunction.entropy()
    sol = solve(SubproblemSpec(x, rng.standard_normal(6), 1.0, h))
    assert sol.solver_used == "sphere_entropy"


# ---------------------------------------------------------- splitting

def test_splitting_matches_closed_form_with_zero_l1():
    rng = make_rng(11)
    for which in range(4):
        spec = random_spec(rng, which, gamma=1.0)
        g_spec = SubproblemSpec(spec.base, spec.euclid_grad, spec.gamma, Q, g=NonsmoothTerm(0.0))
        v_closed = solve_quartic_tangent(spec).value
        sol = solve_generic_constrained(g_spec)
        assert np.linalg.norm(sol.value - v_closed) <= 1e-7 * max(1.0, np.linalg.norm(v_closed))


def test_splitting_large_l1_weight():
    rng = make_rng(12)
    M = Sphere(6)
    x = M.random_point(rng)
    G = rng.standard_normal(6)
    gamma = 1.0
    c = G / gamma - Q.grad(x.value)
    mu = 1e3 * np.linalg.norm(c) * gamma * 10
    sol = solve_generic_constrained(SubproblemSpec(x, G, gamma, Q, g=NonsmoothTerm(mu)))
    assert sol.kkt_residual < 1e-7


def test_splitting_zero_gradient_inclusion():
    rng = make_rng(13)
    M = Stiefel(6, 1)
    x = M.point(np.abs(M.random_point(rng).value))
    gamma, mu = 1.0, 0.3
    spec = SubproblemSpec(x, np.zeros((6, 1)), gamma, Q, g=NonsmoothTerm(mu))
    sol = solve_generic_constrained(spec)
    X, v, y = x.value, sol.value, sol.multiplier
    stat = spec.tangent(gamma * (Q.grad(X + v) - Q.grad(X)) + y)
    assert np.linalg.norm(stat) < 1e-7
    assert spec.g.subgradient_distance(y, X + v, zero_tol=1e-7) < 1e-7


def test_splitting_generic_h_on_stiefel():
    # entropy h away from the sphere: falls through to the damped-Newton v-step
    rng = make_rng(14)
    M = Stiefel(5, 1)
    x = M.point(np.abs(M.random_point(rng).value) + 0.0)
    h = ReferenceFunction.entropy(upper=2.0)
    spec = SubproblemSpec(x, 0.1 * rng.standard_normal((5, 1)), 1.0, h)
    sol = solve(spec)
    assert sol.solver_used == "splitting"
    assert kkt_residual(spec, sol.value) < 1e-7


# -------------------------------------------------------- unconstrained

def test_unconstrained_zero_gradient():
    rng = make_rng(15)
    for which in range(4):
        spec = random_spec(rng, which, constrained=False)
        spec0 = SubproblemSpec(spec.base, np.zeros(spec.base.shape), 1.0, Q, constrained=False)
        assert np.linalg.norm(solve_unconstrained(spec0).value) < 1e-12


def test_unconstrained_quadratic_is_gradient_step():
    rng = make_rng(16)
    spec = random_spec(rng, 0, h=H2, constrained=False)
    v = solve_unconstrained(spec).value
    np.testing.assert_allclose(v, -spec.tangent(spec.euclid_grad) / spec.gamma, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2 ** 31))
def test_unconstrained_quartic_stationarity(which, seed):
    spec = random_spec(make_rng(seed), which, constrained=False)
    sol = solve_unconstrained(spec)
    scale = max(1.0, np.linalg.norm(spec.h.grad(spec.base.value)))
    assert kkt_residual(spec, sol.value) <= 1e-10 * scale


def test_unconstrained_newton_for_entropy():
    rng = make_rng(17)
    x = positive_sphere_point(rng, 5)
    h = ReferenceFunction.entropy()
    spec = SubproblemSpec(x, 0.3 * rng.standard_normal(5), 1.0, h, constrained=False)
    sol = solve_unconstrained(spec)
    assert sol.solver_used == "newton"
    assert sol.kkt_residual < 1e-10


# ---------------------------------------------------- zero-direction

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.sampled_from(["quartic", "quadratic"]), st.integers(0, 2 ** 31))
def test_zero_direction_at_stationary_points(which, kind, seed):
    rng = make_rng(seed)
    h = ReferenceFunction(kind)
    spec = random_spec(rng, which, h=h)
    # a purely normal Euclidean gradient has zero Riemannian gradient
    G = spec.euclid_grad - spec.tangent(spec.euclid_grad)
    for constrained in (True, False):
        s = SubproblemSpec(spec.base, G, spec.gamma, h, constrained=constrained)
        assert np.linalg.norm(solve(s).value) <= 1e-10


def test_spec_validation():
    x = Sphere(3).point(np.array([1.0, 0, 0]))
    with pytest.raises(ValueError):
        SubproblemSpec(x, np.zeros(3), 0.0, Q)
    with pytest.raises(ValueError):
        SubproblemSpec(x, np.zeros(3), 1.0, Q, g=NonsmoothTerm(1.0), constrained=False)


def test_infeasible_log_barrier_reported():
    x = positive_sphere_point(make_rng(18), 3)
    h = ReferenceFunction.log_barrier()
    with pytest.raises((InfeasibleSubproblemError, Exception)):
        solve_sphere_scalar(SubproblemSpec(x, np.array([np.inf, 0.0, 0.0]), 1.0, h))
