"""Trait-structured reaction-diffusion front simulator and verification kit."""

__version__ = "0.1.0"

from .model import (
    CubicBistable,
    KPPMonostable,
    ModelParams,
    ModifiedBistable,
    NonlocalBistableRate,
    Reaction,
    eval_reaction,
    lipschitz_bound,
    mass_above_threshold,
    mass_below_threshold,
    nonlocal_rate,
    reaction_mass,
    stage_two_plateau,
)
from .grid import (
    Field,
    GridSpec,
    Region,
    TruncationError,
    classify,
    classify_frame,
    integrate_theta,
    quadratic_form,
    read_snapshot,
    sample,
    truncation_diagnostic,
    write_snapshot,
)
from .operators import (
    FrameCoeffs,
    cfl_dt,
    diffusion_rhs,
    rhs_frame,
    rhs_local,
)
from .evolve import (
    EvolveConfig,
    InstabilityError,
    RunResult,
    initial_field,
    run,
    step_explicit,
    step_imex,
)
from .steady import (
    SteadyConvergenceError,
    SteadyProblem,
    SteadyReport,
    boundary_normal_derivative,
    halfplane_slopes,
    ring_normal_slope,
    rotational_asymmetry,
    solve_phi_minus,
    solve_phi_plus,
)
from .fronts import (
    FitResult,
    FrontSeries,
    fit_exponent,
    fit_power_law,
    front_theta,
    front_x,
    read_fronts,
    write_fronts,
)
from .trajectory import (
    SubsolutionSeeds,
    SubsolutionState,
    Trajectory,
    eval_trajectory,
    march_subsolution,
    solve_seeds,
    spreading_constant,
    verify_domination,
    verify_ordering,
)

__all__ = [
    "__version__",
    # model
    "CubicBistable",
    "KPPMonostable",
    "ModelParams",
    "ModifiedBistable",
    "NonlocalBistableRate",
    "Reaction",
    "eval_reaction",
    "lipschitz_bound",
    "mass_above_threshold",
    "mass_below_threshold",
    "nonlocal_rate",
    "reaction_mass",
    "stage_two_plateau",
    # grid
    "Field",
    "GridSpec",
    "Region",
    "TruncationError",
    "classify",
    "classify_frame",
    "integrate_theta",
    "quadratic_form",
    "read_snapshot",
    "sample",
    "truncation_diagnostic",
    "write_snapshot",
    # operators
    "FrameCoeffs",
    "cfl_dt",
    "diffusion_rhs",
    "rhs_frame",
    "rhs_local",
    # evolve
    "EvolveConfig",
    "InstabilityError",
    "RunResult",
    "initial_field",
    "run",
    "step_explicit",
    "step_imex",
    # steady
    "SteadyConvergenceError",
    "SteadyProblem",
    "SteadyReport",
    "boundary_normal_derivative",
    "halfplane_slopes",
    "ring_normal_slope",
    "rotational_asymmetry",
    "solve_phi_minus",
    "solve_phi_plus",
    # fronts
    "FitResult",
    "FrontSeries",
    "fit_exponent",
    "fit_power_law",
    "front_theta",
    "front_x",
    "read_fronts",
    "write_fronts",
    # trajectory
    "SubsolutionSeeds",
    "SubsolutionState",
    "Trajectory",
    "eval_trajectory",
    "march_subsolution",
    "solve_seeds",
    "spreading_constant",
    "verify_domination",
    "verify_ordering",
]
