"""Reference incompressible Navier-Stokes solver on the torus.

The pressure-free projected equation dv/dt = Lap v - P nabla:(v (x) v) is
integrated with an integrating-factor RK4: the heat semigroup is applied
exactly per mode, classical RK4 handles the transformed nonlinearity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    _convection_coeffs,
    divergence_l2,
    linf_norm,
    sobolev_norm,
)


class SolverFailure(RuntimeError):
    """Raised when a step produces non-finite coefficients."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


@dataclass(frozen=True, eq=False)
class NsState:
    v: SpectralField
    t: float = 0.0


def heat_propagate(f: SpectralField, tau: float) -> SpectralField:
    """Exact heat semigroup: multiply mode k by exp(-|k|^2 tau)."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0.0:
        return f
    return SpectralField(f.grid, f.coeffs * np.exp(-f.grid.k2 * tau))


def default_dt(grid: Grid, v0: SpectralField) -> float:
    """Advective CFL with safety 0.5; the linear part is exact."""
    vmax = linf_norm(v0)
    if vmax == 0.0:
        return 1e-3
    return min(1e-3, 0.5 / (grid.n * vmax))


def _check_finite(c: np.ndarray, t: float):
    if not np.isfinite(np.vdot(c, c).real):
        raise SolverFailure("non-finite coefficients", t)


class _NsStepper:
    """Integrating-factor RK4 with cached per-mode exponentials."""

    def __init__(self, grid: Grid, dt: float):
        self.grid = grid
        self.dt = dt
        self.e_full = np.exp(-grid.k2 * dt)
        self.e_half = np.exp(-grid.k2 * (dt / 2.0))

    def rhs(self, c: np.ndarray) -> np.ndarray:
        return -_convection_coeffs(self.grid, c)

    def step(self, c: np.ndarray) -> np.ndarray:
        dt, e, e2 = self.dt, self.e_full, self.e_half
        a = self.rhs(c)
        b = self.rhs(e2 * (c + (dt / 2.0) * a))
        d = self.rhs(e2 * c + (dt / 2.0) * b)
        g = self.rhs(e * c + dt * (e2 * d))
        return e * c + (dt / 6.0) * (e * a + 2.0 * e2 * (b + d) + g)


def ns_step(state: NsState, dt: float) -> NsState:
    """One integrating-factor RK4 step."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    stepper = _NsStepper(state.v.grid, dt)
    c = stepper.step(state.v.coeffs)
    _check_finite(c, state.t + dt)
    return NsState(SpectralField(state.v.grid, c), state.t + dt)


def plan_steps(T: float, dt: float):
    """Uniform step count covering [0, T] exactly (last step shortened by
    construction: dt_eff = T / n_steps <= dt)."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if T == 0.0:
        return 0, 0.0
    n_steps = max(1, math.ceil(T / dt - 1e-12))
    return n_steps, T / n_steps


def ns_solve(
    v0: SpectralField,
    T: float,
    dt: float | None = None,
    observer=None,
    stride: int = 1,
) -> NsState:
    """Integrate to time T, invoking ``observer(state)`` at exact sample
    times (every ``stride``-th step plus t=0 and t=T)."""
    grid = v0.grid
    if divergence_l2(grid, v0.coeffs) > 1e-8 * max(sobolev_norm(v0, 1.0), 1e-300):
        raise ValueError("ns_solve requires divergence-free initial data")
    if dt is None:
        dt = default_dt(grid, v0)
    n_steps, dt_eff = plan_steps(T, dt)

    state = NsState(v0, 0.0)
    if observer is not None:
        observer(state)
    if n_steps == 0:
        return state

    stepper = _NsStepper(grid, dt_eff)
    c = v0.coeffs
    for i in range(1, n_steps + 1):
        c = stepper.step(c)
        t = i * dt_eff
        if i % max(stride, 1) == 0 or i == n_steps:
            _check_finite(c, t)
            state = NsState(SpectralField(grid, c), t)
            if observer is not None and i != n_steps:
                observer(state)
    state = NsState(SpectralField(grid, c), T)
    if observer is not None:
        observer(state)
    return state


def dt_v(state: NsState) -> SpectralField:
    """Time derivative Lap v - P nabla:(v (x) v), evaluated spectrally."""
    g = state.v.grid
    c = -g.k2 * state.v.coeffs - _convection_coeffs(g, state.v.coeffs)
    return SpectralField(g, c)
