"""Reference functions h and their Bregman distances.

Four kinds are supported::

    quadratic    h(x) = ||x||^2 / 2
    quartic      h(x) = ||x||^4 / 4 + ||x||^2 / 2
    log_barrier  h(x) = -sum(log x_i)
    entropy      h(x) = sum(x_i log x_i)

The last two live on the open positive orthant and are only strongly convex
on a bounded box; their constant is derived from a caller-supplied upper
bound on the entries.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

KINDS = ("quadratic", "quartic", "log_barrier", "entropy")


@dataclass(frozen=True)
class ReferenceFunction:
    kind: str
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reference function {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("strong-convexity constant must be positive")

    @classmethod
    def quadratic(cls):
        return cls("quadratic", 1.0)

    @classmethod
    def quartic(cls):
        return cls("quartic", 1.0)

    @classmethod
    def log_barrier(cls, upper=1.0):
        # Hessian diag(1/x^2) >= 1/U^2 on (0, U]^n
        return cls("log_barrier", 1.0 / upper ** 2)

    @classmethod
    def entropy(cls, upper=1.0):
        # Hessian diag(1/x) >= 1/U on (0, U]^n
        return cls("entropy", 1.0 / upper)

    @property
    def needs_positive(self):
        return self.kind in ("log_barrier", "entropy")

    def check_domain(self, x):
        if self.needs_positive:
            bad = np.flatnonzero(~(np.asarray(x) > 0))
            if bad.size:
                i = int(bad[0])
                raise DomainError(
                    f"{self.kind}: entry {i} = {np.ravel(x)[i]!r} is not positive", index=i)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.check_domain(x)
        if self.kind == "quadratic":
            return 0.5 * float(np.vdot(x, x))
        if self.kind == "quartic":
            s = float(np.vdot(x, x))
            return 0.25 * s * s + 0.5 * s
        if self.kind == "log_barrier":
            return -float(np.sum(np.log(x)))
        return float(np.sum(x * np.log(x)))

    def grad(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.check_domain(x)
        if self.kind == "quadratic":
            return x.copy()
        if self.kind == "quartic":
            return (float(np.vdot(x, x)) + 1.0) * x
        if self.kind == "log_barrier":
            return -1.0 / x
        return np.log(x) + 1.0

    def hess_diag(self, x):
        """Diagonal of the Hessian for the separable kinds."""
        x = np.asarray(x, dtype=np.float64)
        self.check_domain(x)
        if self.kind == "quadratic":
            return np.ones_like(x)
        if self.kind == "log_barrier":
            return 1.0 / (x * x)
        if self.kind == "entropy":
            return 1.0 / x
        raise ValueError("quartic Hessian is not diagonal; use hess_vec")

    def hess_vec(self, x, d):
        """Hessian-vector product at ``x``."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "quartic":
            return (float(np.vdot(x, x)) + 1.0) * d + 2.0 * float(np.vdot(x, d)) * x
        return self.hess_diag(x) * d


@dataclass(frozen=True)
class BregmanEval:
    value: float
    grad_at_first: np.ndarray


def h_value(h, x):
    return h.value(x)


def h_grad(h, x):
    return h.grad(x)


def bregman(h, y, x):
    """D_h(y, x) = h(y) - h(x) - <grad h(x), y - x>.

    Each kind uses an algebraically equivalent form that avoids the
    cancellation of the defining difference.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    h.check_domain(x)
    gy = h.grad(y)
    if y is x or np.array_equal(y, x):
        return BregmanEval(0.0, gy)
    d = y - x
    if h.kind == "quadratic":
        val = 0.5 * float(np.vdot(d, d))
    elif h.kind == "quartic":
        a = float(np.vdot(x, x))
        s = float(np.vdot(x, d))
        q = float(np.vdot(d, d))
        val = 0.5 * (a + 1.0) * q + (s + 0.5 * q) ** 2
    elif h.kind == "log_barrier":
        t = y / x
        val = float(np.sum(t - 1.0 - np.log(t)))
    else:
        val = float(np.sum(y * np.log(y / x) - d))
    return BregmanEval(val, gy)
