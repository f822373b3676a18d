"""Numerical laboratory for two-species competition-diffusion systems with a
Stefan-type free boundary in time-periodic heterogeneous environments."""

__version__ = "0.1.0"

from .model import (CoefficientField, InitialData, ModelParams,
                    PeriodicScalarFunction, check_H1, check_H2,
                    classify_environment)
from .periodic_ode import (EnvelopeConstants, PeriodicLogisticSolution,
                           check_H3, envelope_constants,
                           solve_periodic_logistic, vbar)
from .eigensolver import (EigenProblem, EigenResult, UNBOUNDED,
                          principal_eigenvalue, threshold_diffusion_fast,
                          threshold_diffusion_slow, threshold_radius)
from .entire import (RadialPeriodicField, check_asymptotic_bounds,
                     effective_u_growth, entire_state_u,
                     entire_state_u_unhindered, entire_state_v,
                     solve_periodic_entire)
from .fbsolver import (SimulationState, SolverConfig, Trajectory,
                       compare_runs, scalar_free_boundary, simulate, step,
                       verify_bounds)
from .analysis import (DichotomyVerdict, SemiWaveResult, classify,
                       find_eps_star, find_mu_star, measure_speed,
                       semiwave_k0, speed_bounds)

__all__ = [
    "CoefficientField", "InitialData", "ModelParams",
    "PeriodicScalarFunction", "check_H1", "check_H2", "classify_environment",
    "EnvelopeConstants", "PeriodicLogisticSolution", "check_H3",
    "envelope_constants", "solve_periodic_logistic", "vbar",
    "EigenProblem", "EigenResult", "UNBOUNDED", "principal_eigenvalue",
    "threshold_diffusion_fast", "threshold_diffusion_slow",
    "threshold_radius",
    "RadialPeriodicField", "check_asymptotic_bounds", "effective_u_growth",
    "entire_state_u", "entire_state_u_unhindered", "entire_state_v",
    "solve_periodic_entire",
    "SimulationState", "SolverConfig", "Trajectory", "compare_runs",
    "scalar_free_boundary", "simulate", "step", "verify_bounds",
    "DichotomyVerdict", "SemiWaveResult", "classify", "find_eps_star",
    "find_mu_star", "measure_speed", "semiwave_k0", "speed_bounds",
    "__version__",
]
