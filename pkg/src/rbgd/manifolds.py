"""Embedded submanifolds: unit sphere, Stiefel and fixed-rank matrices.

Points and tangent vectors are thin wrappers around numpy arrays.  A
:class:`ManifoldPoint` knows which manifold it belongs to and, for the
fixed-rank manifold, carries the thin SVD of the point so tangent projections
never refactorize.
"""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import config
from .errors import DegenerateProjectionError, FeasibilityError, RetractionDomainError
from .numerics import polar_factor, svd


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    value: np.ndarray
    manifold: "Manifold"
    cache: Optional[Any] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.value.shape


@dataclass(frozen=True, eq=False)
class TangentVector:
    value: np.ndarray
    base: ManifoldPoint
    normal: bool = False

    def __array__(self, dtype=None):
        return self.value if dtype is None else self.value.astype(dtype)


def _as_array(w):
    if isinstance(w, (TangentVector, ManifoldPoint)):
        return w.value
    return np.asarray(w, dtype=np.float64)


class Manifold:
    """Geometry contract shared by the concrete manifolds."""

    tag = "abstract"
    compact = False

    def __init__(self, shape):
        self.shape = tuple(shape)

    # subclasses implement the array-level maps below
    def _tangent(self, x, W):
        raise NotImplementedError

    def _project(self, W):
        raise NotImplementedError

    def _retract(self, x, V):
        return self._project(x.value + V)

    def feasibility_residual(self, X):
        raise NotImplementedError

    def _random(self, rng):
        raise NotImplementedError

    # public API
    def point(self, X, check=True):
        """Wrap an array as a point, verifying that it lies on the manifold."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {X.shape}")
        if check:
            res = self.feasibility_residual(X)
            if not res <= config.TOL.feasibility:
                raise FeasibilityError(f"{self.tag}: feasibility residual {res:.3e}")
        return ManifoldPoint(X, self)

    def _coerce(self, x):
        if isinstance(x, ManifoldPoint):
            return x
        return self.point(x)

    def project_tangent(self, x, w):
        x = self._coerce(x)
        return TangentVector(self._tangent(x, _as_array(w)), x)

    def project_normal(self, x, w):
        x = self._coerce(x)
        W = _as_array(w)
        return TangentVector(W - self._tangent(x, W), x, normal=True)

    def retract(self, x, v):
        x = self._coerce(x)
        V = _as_array(v)
        if not np.any(V):
            return x
        return self._retract(x, V)

    def project_manifold(self, w):
        return self._project(_as_array(w))

    def random_point(self, rng):
        return self._random(rng)

    def __repr__(self):
        return f"{type(self).__name__}{self.shape}"


class Sphere(Manifold):
    """Unit sphere in R^n."""

    tag = "sphere"
    compact = True

    def __init__(self, n):
        if n < 2:
            raise ValueError("sphere needs n >= 2")
        super().__init__((n,))
        self.n = n

    def feasibility_residual(self, X):
        return abs(np.linalg.norm(X) - 1.0)

    def _tangent(self, x, W):
        X = x.value
        return W - X * np.dot(X, W)

    def _project(self, W):
        nrm = np.linalg.norm(W)
        if nrm == 0.0 or not np.isfinite(nrm):
            raise RetractionDomainError("sphere: cannot normalize a zero vector")
        return ManifoldPoint(W / nrm, self)

    def _random(self, rng):
        return self._project(rng.standard_normal(self.n))


class Stiefel(Manifold):
    """St(m, p) = {X in R^{m x p} : X^T X = I_p}, polar retraction."""

    tag = "stiefel"
    compact = True

    def __init__(self, m, p):
        if not (m >= p >= 1):
            raise ValueError("Stiefel needs m >= p >= 1")
        super().__init__((m, p))
        self.m, self.p = m, p

    def feasibility_residual(self, X):
        return float(np.linalg.norm(X.T @ X - np.eye(self.p)))

    def _tangent(self, x, W):
        X = x.value
        S = X.T @ W
        return W - X @ (0.5 * (S + S.T))

    def _project(self, W):
        try:
            Q = polar_factor(W)
        except DegenerateProjectionError as exc:
            raise RetractionDomainError(f"stiefel: {exc}") from exc
        # One Newton-Schulz sweep takes ||Q'Q - I|| from ~1e-14 to ~1e-15.
        # Objectives with a large normal gradient component see this error
        # directly as noise in f, which limits how far a monotone
        # linesearch can drive the gradient.
        return ManifoldPoint(Q + 0.5 * (Q @ (np.eye(self.p) - Q.T @ Q)), self)

    def _random(self, rng):
        return self._project(rng.standard_normal(self.shape))


class FixedRank(Manifold):
    """m x p matrices of rank exactly r; retraction = truncated SVD.

    With ``p == r`` this is the open set of full-column-rank matrices, whose
    tangent space is the whole ambient space.
    """

    tag = "fixed_rank"
    compact = False

    def __init__(self, m, p, r):
        if not (min(m, p) >= r >= 1):
            raise ValueError("fixed-rank needs m, p >= r >= 1")
        super().__init__((m, p))
        self.m, self.p, self.r = m, p, r

    @property
    def full(self):
        return self.r == min(self.m, self.p)

    def _factor(self, W):
        U, s, V = svd(W)
        r = self.r
        if not (s[r - 1] > config.TOL.rank_threshold * s[0]):
            raise RetractionDomainError(
                f"fixed-rank: sigma_r={s[r - 1]:.3e} below threshold (sigma_1={s[0]:.3e})")
        return U[:, :r], s[:r], V[:, :r]

    def feasibility_residual(self, X):
        s = np.linalg.svd(X, compute_uv=False)
        if not s[self.r - 1] > config.TOL.rank_threshold * s[0]:
            return np.inf
        tail = s[self.r] if s.size > self.r else 0.0
        return tail / max(1.0, s[0])

    def point(self, X, check=True):
        X = np.asarray(X, dtype=np.float64)
        if check and self.feasibility_residual(X) > config.TOL.feasibility:
            raise FeasibilityError("fixed-rank: point does not have rank r")
        U, s, V = self._factor(X)
        return ManifoldPoint(X, self, cache=(U, s, V))

    def _tangent(self, x, W):
        if self.full:
            # P_U or P_V is the identity, so the projection is too
            return W.copy()
        U, _, V = x.cache
        A = U.T @ W
        B = W @ V
        return U @ A + B @ V.T - U @ ((A @ V) @ V.T)

    def _project(self, W):
        U, s, V = self._factor(W)
        X = W if self.full else (U * s) @ V.T
        return ManifoldPoint(X, self, cache=(U, s, V))

    def _random(self, rng):
        return self._project(rng.standard_normal(self.shape))


def make_manifold(tag, dims):
    tag = tag.replace("-", "_").lower()
    if tag == "sphere":
        return Sphere(*dims)
    if tag == "stiefel":
        return Stiefel(*dims)
    if tag == "fixed_rank":
        return FixedRank(*dims)
    raise ValueError(f"unknown manifold {tag!r}")


# Module-level forms of the geometry operations.

def project_tangent(x, w):
    return x.manifold.project_tangent(x, w)


def project_normal(x, w):
    return x.manifold.project_normal(x, w)


def retract(x, v):
    return x.manifold.retract(x, v)


def project_manifold(x_near, w):
    """Nearest point on ``x_near``'s manifold to the ambient array ``w``."""
    return x_near.manifold.project_manifold(w)


def random_point(tag, dims, rng):
    return make_manifold(tag, dims).random_point(rng)
