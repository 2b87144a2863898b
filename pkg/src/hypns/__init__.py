"""Pseudo-spectral solvers and energy diagnostics for the damped-wave
relaxation of incompressible Navier-Stokes on the periodic torus."""

from .diagnostics import (
    DiagnosticsConfig,
    EnergyReport,
    composite_energy,
    dafermos_derivative_residuals,
    dafermos_energy,
    energy,
    energy_decay_audit,
    epsilon_dt_cross_term,
    interpolation_ratios,
    linf_threshold,
    make_energy_report,
    trilinear_ratio,
)
from .experiments import (
    ConfigError,
    DataRecipe,
    ExperimentConfig,
    RateFit,
    SweepResult,
    fit_rate,
    parse_config,
    run_convergence,
    run_existence_probe,
    run_inequality_audit,
)
from .initial_data import (
    HypothesisReport,
    check_bernstein,
    check_hypotheses,
    check_jackson,
    random_divergence_free_field,
    synth_hs_field,
    taylor_green,
    truncate_initial_data,
)
from .nlw import (
    ModeRoots,
    WaveSolveResult,
    WaveState,
    linear_propagate,
    mode_roots,
    nlw_solve,
    nlw_step,
    propagate_mode,
    rescale,
)
from .ns import NsState, SolverFailure, dt_v, heat_propagate, ns_solve, ns_step
from .reporting import emit_report
from .spectral import (
    Grid,
    SpectralField,
    convection_term,
    divergence,
    inverse_transform,
    l2_norm,
    lambda_power,
    leray_project,
    linf_norm,
    make_grid,
    sobolev_norm,
    transform,
    zero_field,
)

__version__ = "0.1.0"
