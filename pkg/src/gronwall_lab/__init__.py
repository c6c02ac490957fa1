"""Numerical laboratory for a Burkholder-type martingale inequality with an
explicit constant and the stochastic Gronwall bounds derived from it."""

from .analytic import (
    Exponent,
    GeometricLadder,
    HolderPair,
    bound_drei,
    bound_eins,
    bound_zwei,
    burkholder_constant,
    gamma_objective,
    gamma_prefactor,
    jump_counterexample_ratio,
    ladder_moment,
    optimize_prefactor,
    pi_p_over_sin,
    stopped_sup_law,
    tail_integral_oracle,
)
from .simulate import RngStream

__version__ = "0.1.0"

__all__ = [
    "Exponent",
    "GeometricLadder",
    "HolderPair",
    "RngStream",
    "bound_drei",
    "bound_eins",
    "bound_zwei",
    "burkholder_constant",
    "gamma_objective",
    "gamma_prefactor",
    "jump_counterexample_ratio",
    "ladder_moment",
    "optimize_prefactor",
    "pi_p_over_sin",
    "stopped_sup_law",
    "tail_integral_oracle",
]
