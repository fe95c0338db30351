"""Method-of-lines integrator for radial solutions with compactly supported data.

The second-order equation is split into ``u_t = v``,
``v_t = e^{-2Ht} Δu + S(t, u, v, u_r)`` and advanced with classical RK4.
The step is ``0.5 h`` (the propagation speed e^{-Ht} never exceeds 1), and
shrinks further once the nonlinear time scale of the growing solution
becomes shorter than that, so the approach to the blow-up threshold is
resolved.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import diagnostics, special
from .discretization import RadialGrid, laplacian, radial_derivative
from .model import Kind, ModelParams, source

log = logging.getLogger(__name__)

CFL = 0.5


class ConfigurationError(ValueError):
    pass


class Status(str, Enum):
    BLEW_UP = "BlewUp"
    SURVIVED = "SurvivedToTmax"
    FAILED = "NumericalFailure"


@dataclass(frozen=True)
class InitialDataSpec:
    """Amplitude and bump orders of f = (1-r^2)_+^{k_f}, g = (1-r^2)_+^{k_g}."""

    eps: float
    k_f: int = 8
    k_g: int = 8
    f_on: bool = True
    g_on: bool = True

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"amplitude eps must lie in [0, 1], got {self.eps}")
        if self.k_f < 4 or self.k_g < 4:
            raise ValueError("bump orders k_f, k_g must be >= 4")

    def f(self, r):
        return _bump(r, self.k_f) if self.f_on else np.zeros_like(r)

    def g(self, r):
        return _bump(r, self.k_g) if self.g_on else np.zeros_like(r)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "k_f": self.k_f, "k_g": self.k_g,
                "f_on": self.f_on, "g_on": self.g_on}


def _bump(r, k):
    r = np.asarray(r, dtype=float)
    return np.where(r < 1.0, np.clip(1.0 - r * r, 0.0, None) ** k, 0.0)


@dataclass(frozen=True)
class WaveState:
    t: float
    u: np.ndarray
    v: np.ndarray

    @property
    def failed(self) -> bool:
        return not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


def make_initial_state(spec: InitialDataSpec, grid: RadialGrid,
                       strict: bool = True) -> WaveState:
    """Sample ``eps f`` and ``eps g`` on the grid.

    With ``strict`` the data must satisfy the blow-up hypotheses: both
    profiles nonnegative, supported in the unit ball, and ``g`` not
    identically zero.
    """
    if strict and not spec.g_on:
        raise ValueError("initial velocity profile g must not vanish identically")
    if grid.r_max < 1.0:
        raise ValueError("grid must contain the unit ball")
    r = grid.r
    u = spec.eps * spec.f(r)
    v = spec.eps * spec.g(r)
    u[-1] = v[-1] = 0.0
    return WaveState(0.0, u, v)


def rhs(state: WaveState, params: ModelParams, grid: RadialGrid):
    """Time derivative ``(u_t, v_t)``; the outer node is held at zero."""
    if state.failed:
        raise FloatingPointError("non-finite values in the state")
    return _rhs(state.t, state.u, state.v, params, grid)


def _rhs(t, u, v, params, grid):
    dv = math.exp(-2.0 * params.H * t) * laplacian(u, grid, params.n)
    if params.kind is not Kind.LINEAR:
        u_r = radial_derivative(u, grid) if params.kind is Kind.POWER_GRAD else None
        dv += source(params, t, u, v, u_r)
    du = v.copy()
    du[-1] = 0.0
    dv[-1] = 0.0
    return du, dv


def step(state: WaveState, dt: float, params: ModelParams, grid: RadialGrid) -> WaveState:
    """One classical RK4 step.  Negative ``dt`` integrates backwards."""
    if abs(dt) > CFL * grid.h * (1.0 + 1e-12):
        raise ConfigurationError(f"|dt|={abs(dt):.3e} exceeds CFL*h={CFL * grid.h:.3e}")
    t, u, v = state.t, state.u, state.v
    with np.errstate(over="ignore", invalid="ignore"):
        k1u, k1v = _rhs(t, u, v, params, grid)
        k2u, k2v = _rhs(t + dt / 2, u + dt / 2 * k1u, v + dt / 2 * k1v, params, grid)
        k3u, k3v = _rhs(t + dt / 2, u + dt / 2 * k2u, v + dt / 2 * k2v, params, grid)
        k4u, k4v = _rhs(t + dt, u + dt * k3u, v + dt * k3v, params, grid)
        u_new = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v_new = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return WaveState(t + dt, u_new, v_new)


@dataclass(frozen=True)
class Controls:
    T_max: float
    U_max: float = 1e8
    sample_dt: float = 0.05
    nonlinear_courant: float = 0.02
    n_fit: int = 10

    def __post_init__(self):
        if not self.T_max > 0:
            raise ValueError("T_max must be positive")
        if not self.sample_dt > 0:
            raise ValueError("sample_dt must be positive")
        if self.n_fit < 2:
            raise ValueError("need at least two points for the lifespan fit")

    def to_dict(self) -> dict:
        return {"T_max": self.T_max, "U_max": self.U_max, "sample_dt": self.sample_dt,
                "nonlinear_courant": self.nonlinear_courant, "n_fit": self.n_fit}


@dataclass
class BlowupReport:
    status: Status
    T_est: float
    peak_sup: float
    series: diagnostics.FunctionalSeries
    t_final: float
    steps: int
    support_leak: float
    dt: float
    m: int
    final_state: WaveState | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.status is not Status.BLEW_UP and not math.isnan(self.T_est):
            raise ValueError("T_est is defined only for blown-up runs")


def _monitor(state, params, grid):
    """Size of the growing quantity and its nonlinear rate."""
    p = params.p
    if params.kind is Kind.POWER_GRAD:
        mag = max(float(np.max(np.abs(state.v))),
                  float(np.max(np.abs(radial_derivative(state.u, grid)))))
        rate = p * params.source_weight(state.t) * mag ** (p - 1)
    else:
        mag = float(np.max(np.abs(state.u)))
        rate = math.sqrt(p * params.source_weight(state.t) * mag ** (p - 1))
    return mag, rate


def _profile_power(params):
    # Leading-order blow-up of u'' = c u^p is u ~ (T-t)^{-2/(p-1)}; first-order
    # growth v' = c v^p gives (T-t)^{-1/(p-1)}.
    return (params.p - 1) / (1 if params.kind is Kind.POWER_GRAD else 2)


def extrapolate_blowup_time(t, mag, power: float) -> float:
    """Zero of the least-squares line through ``mag^{-power}`` against ``t``."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(mag, dtype=float) ** (-power)
    slope, intercept = np.polyfit(t - t[-1], w, 1)
    if not slope < 0:
        return float("nan")
    return float(t[-1] - intercept / slope)


def evolve(state: WaveState, params: ModelParams, grid: RadialGrid, controls: Controls,
           ctx: special.TestFunctionContext | None = None) -> BlowupReport:
    """Integrate from ``state`` until blow-up, ``T_max`` or numerical failure."""
    if state.failed:
        raise ValueError("initial state is not finite")
    sup0 = float(np.max(np.abs(state.u)))
    if not controls.U_max > sup0:
        raise ValueError(f"U_max={controls.U_max} must exceed the initial sup {sup0}")
    if params.kind is Kind.POWER_U and params.H > 0 and ctx is None:
        ctx = special.TestFunctionContext(params.n, p=params.p, H=params.H)

    h = grid.h
    dt_wave = CFL * h
    r = grid.r
    series = diagnostics.FunctionalSeries(sample_dt=controls.sample_dt)
    series.append(diagnostics.sample(state, grid, params, ctx))
    next_sample = controls.sample_dt
    power = _profile_power(params)
    recent_t = [state.t]
    recent_mag = [_monitor(state, params, grid)[0]]
    peak = sup0
    leak = 0.0
    steps = 0
    status = Status.SURVIVED
    T_est = float("nan")

    while True:
        mag, rate = _monitor(state, params, grid)
        dt = dt_wave
        if rate > 0:
            dt = min(dt, controls.nonlinear_courant / rate)
        dt = min(dt, next_sample - state.t, controls.T_max - state.t)
        state = step(state, dt, params, grid)
        steps += 1
        # Land exactly on sample times and T_max despite rounding in t.
        if abs(state.t - next_sample) < 1e-9 * dt_wave:
            state = WaveState(next_sample, state.u, state.v)
        if abs(state.t - controls.T_max) < 1e-9 * dt_wave:
            state = WaveState(controls.T_max, state.u, state.v)
        if state.failed:
            status = Status.FAILED
            break
        sup = float(np.max(np.abs(state.u)))
        peak = max(peak, sup)
        front = np.searchsorted(r, 1.0 + state.t + 3 * h, side="right")
        if front < r.size:
            leak = max(leak, float(np.max(np.abs(state.u[front:]))))
        mag = _monitor(state, params, grid)[0]
        recent_t.append(state.t)
        recent_mag.append(mag)
        if len(recent_t) > controls.n_fit:
            del recent_t[0], recent_mag[0]
        crossed = mag > controls.U_max
        if crossed or state.t >= next_sample or state.t >= controls.T_max:
            series.append(diagnostics.sample(state, grid, params, ctx))
            while next_sample <= state.t:
                next_sample += controls.sample_dt
        if crossed:
            status = Status.BLEW_UP
            T_est = extrapolate_blowup_time(recent_t, recent_mag, power)
            break
        if state.t >= controls.T_max:
            break

    return BlowupReport(status, T_est, peak, series, state.t, steps, leak,
                        dt_wave, grid.m, final_state=state)


def evolve_until_blowup(params: ModelParams, spec: InitialDataSpec, grid: RadialGrid,
                        controls: Controls) -> BlowupReport:
    if grid.horizon(params.H) < controls.T_max * (1 - 1e-12):
        raise ValueError(
            f"grid radius {grid.r_max:.4g} is too small for T_max={controls.T_max}"
        )
    return evolve(make_initial_state(spec, grid), params, grid, controls)


def lifespan_estimate(reports) -> tuple[float, float]:
    """Finest-grid lifespan and the difference to the next coarser grid."""
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("need reports from at least two refinements")
    if any(rep.status is not Status.BLEW_UP for rep in reports):
        raise ValueError("blow-up is not grid-converged: mixed statuses")
    reports.sort(key=lambda rep: rep.m)
    return reports[-1].T_est, abs(reports[-1].T_est - reports[-2].T_est)
