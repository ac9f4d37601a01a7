"""Instrumented simulator for the nonhomogeneous incompressible Bénard system
with density-dependent viscosity on rectangular boxes."""
from .config import SimConfig, load_config, parse_config
from .errors import (
    BenardError,
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    HypothesisViolation,
    PositivityError,
    SolverError,
    StabilityError,
    StructuralError,
    ViscosityBoundError,
)
from .grid import Grid, ScalarField, VectorField, build_grid, lp_norm
from .ledger import LedgerRow, RateParams, Verdict, sigma_and_threshold
from .scenarios import run_scenario, run_simulation
from .stepper import FluidState, StepConfig, StepReport, step
from .stokes import StokesProblem, StokesSolution, solve_stokes
from .transport import ViscosityLaw

__all__ = [
    "BenardError",
    "ConfigurationError",
    "DegenerateInputError",
    "DomainError",
    "FluidState",
    "Grid",
    "HypothesisViolation",
    "LedgerRow",
    "PositivityError",
    "RateParams",
    "ScalarField",
    "SimConfig",
    "SolverError",
    "StabilityError",
    "StepConfig",
    "StepReport",
    "StokesProblem",
    "StokesSolution",
    "StructuralError",
    "VectorField",
    "Verdict",
    "ViscosityBoundError",
    "ViscosityLaw",
    "build_grid",
    "load_config",
    "lp_norm",
    "parse_config",
    "run_scenario",
    "run_simulation",
    "sigma_and_threshold",
    "solve_stokes",
    "step",
]
