"""Coupled bulk-surface Allen-Cahn dynamics on a periodic strip.

The bulk order parameter diffuses inside the strip and reacts through a
possibly non-smooth monotone potential; a second order parameter lives
on the boundary circles and couples to the bulk through a Robin
transmission law K*dnu(u) + u = h(phi). As K -> 0 the law becomes the
affine constraint u = alpha*phi + eta, and a dedicated solver
integrates that limit system directly. The harness measures the
distance between the two dynamics and fits the convergence rates.
"""

from .backends import backend_name
from .config_io import load_config, parse_config, write_toml
from .errors import (BsacError, DivergenceError, DomainError, FitError,
                     InputError, NumericalError)
from .graphs import (MonotoneGraph, compose_affine_domain, custom_graph,
                     minimal_section, moreau_envelope, obstacle_graph,
                     polynomial_graph, resolvent, resolvent_of_yosida, yosida,
                     zero_graph)
from .grid import (NormReport, StripGrid, SurfaceField, interval_grid,
                   normal_derivative, norms, trace)
from .harness import (DEFAULT_KS, ConvergenceTable, ErrorNorms, RateFit,
                      ScalingReport, ctsdep, fit_rate, sweep_K, sweep_eps,
                      trajectory_errors)
from .limit import LimitState, reconstruct_phi, run_limit, step_limit
from .model import (Coupling, DataSpec, EnergyReport, ModelConfig,
                    PotentialSplit, affine_coupling, double_well_split,
                    energy, identity_coupling, linear_pi_split,
                    obstacle_split, suggested_dt, tanh_coupling, validate,
                    zero_pi_split)
from .robin import (ResidualReport, RunResult, SolverState, SteadyResult,
                    run, stationary_residual, steady_state, step)

__version__ = "0.1.0"

__all__ = [
    "BsacError", "ConvergenceTable", "Coupling", "DEFAULT_KS", "DataSpec",
    "DivergenceError", "DomainError", "EnergyReport", "ErrorNorms",
    "FitError", "InputError", "LimitState", "ModelConfig", "MonotoneGraph",
    "NormReport", "NumericalError", "PotentialSplit", "RateFit",
    "ResidualReport", "RunResult", "ScalingReport", "SolverState",
    "SteadyResult", "StripGrid", "SurfaceField", "affine_coupling",
    "backend_name", "compose_affine_domain", "ctsdep", "custom_graph",
    "double_well_split", "energy", "fit_rate", "identity_coupling",
    "interval_grid", "linear_pi_split", "load_config", "minimal_section",
    "moreau_envelope", "normal_derivative", "norms", "obstacle_graph",
    "obstacle_split", "parse_config", "polynomial_graph", "reconstruct_phi",
    "resolvent", "resolvent_of_yosida", "run", "run_limit",
    "stationary_residual", "steady_state", "step", "step_limit",
    "suggested_dt", "sweep_K", "sweep_eps", "tanh_coupling", "trace",
    "trajectory_errors", "validate", "write_toml", "yosida", "zero_graph",
    "zero_pi_split",
]
