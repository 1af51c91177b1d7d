"""Numerical laboratory for measurable Livsic regularity on Markov interval maps.

Subpackages: :mod:`livsiclab.dynamics` (maps, orbits, cylinders),
:mod:`livsiclab.towers` (Young and Hofbauer towers) and
:mod:`livsiclab.livsic` (cocycles, reconstruction, obstructions, regularity).
"""
from .groups import Circle, GroupMetric, RealVec, Unitary, distance, inverse, multiply
from .kernels import BACKEND
from .dynamics.maps import PiecewiseMap, builtin, estimate_density
from .dynamics.orbits import lyapunov_exponent, periodic_points, sample_backward_orbit
from .livsic.cocycle import Cocycle, log_derivative_cocycle, real_cocycle
from .livsic.obstruction import periodic_obstruction
from .livsic.reconstruct import reconstruct_coboundary_on_grid, reconstruct_transfer
from .towers.hofbauer import hofbauer_build
from .towers.young import induce_first_return, kac_and_lambda

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Circle",
    "Cocycle",
    "GroupMetric",
    "PiecewiseMap",
    "RealVec",
    "Unitary",
    "builtin",
    "distance",
    "estimate_density",
    "hofbauer_build",
    "induce_first_return",
    "inverse",
    "kac_and_lambda",
    "log_derivative_cocycle",
    "lyapunov_exponent",
    "multiply",
    "periodic_obstruction",
    "periodic_points",
    "real_cocycle",
    "reconstruct_coboundary_on_grid",
    "reconstruct_transfer",
    "sample_backward_orbit",
]
