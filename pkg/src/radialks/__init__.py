"""Radially symmetric quasilinear Smoluchowski-Poisson (Keller-Segel) toolkit.

Simulation of the mass-function equation on the unit ball, the moment and
remainder functionals of the virial identity, and the blow-up criterion
built on them.
"""
from .analysis import (
    ThresholdReport,
    blowup_time_bound,
    critical_mass_zero,
    empirical_threshold,
    evaluate_criterion,
    optimize_p,
)
from .functionals import (
    VirialSample,
    bar_moment,
    check_estimate_chain,
    energy_E,
    kappa,
    moment_of_state,
    remainder_R,
    virial_rhs_identity,
)
from .model import (
    ConcentratedBump,
    DiffusionLaw,
    Params,
    RadialGrid,
    RadialState,
    SmoothBump,
    Uniform,
    density_from_mass,
    eval_A,
    eval_a,
    make_initial_data,
    mass_from_density,
    recover_v,
)
from .solver import Scheme, SolverControls, Trajectory, integrate, step, virial_trace

__version__ = "0.1.0"

__all__ = [
    "ConcentratedBump",
    "DiffusionLaw",
    "Params",
    "RadialGrid",
    "RadialState",
    "Scheme",
    "SmoothBump",
    "SolverControls",
    "ThresholdReport",
    "Trajectory",
    "Uniform",
    "VirialSample",
    "bar_moment",
    "blowup_time_bound",
    "check_estimate_chain",
    "critical_mass_zero",
    "density_from_mass",
    "empirical_threshold",
    "energy_E",
    "eval_A",
    "eval_a",
    "evaluate_criterion",
    "integrate",
    "kappa",
    "make_initial_data",
    "mass_from_density",
    "moment_of_state",
    "optimize_p",
    "recover_v",
    "remainder_R",
    "step",
    "virial_rhs_identity",
    "virial_trace",
]
