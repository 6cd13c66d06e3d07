"""Riemannian Bregman gradient methods on embedded submanifolds."""
from . import config
from .bregman import ReferenceFunction, bregman
from .errors import RBGDError
from .manifolds import FixedRank, ManifoldPoint, Sphere, Stiefel, TangentVector, make_manifold
from .problems import MinibatchOracle, NepvProblem, SensingProblem, generate_sensing
from .solvers import RunReport, SolverConfig, run
from .subproblem import NonsmoothTerm, SubproblemSpec, solve

__all__ = [
    "config", "ReferenceFunction", "bregman", "RBGDError", "FixedRank", "ManifoldPoint",
    "Sphere", "Stiefel", "TangentVector", "make_manifold", "MinibatchOracle", "NepvProblem",
    "SensingProblem", "generate_sensing", "RunReport", "SolverConfig", "run",
    "NonsmoothTerm", "SubproblemSpec", "solve",
]
