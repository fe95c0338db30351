"""Spatial functionals along a run and the differential inequalities they obey.

The averaged quantity is ``G(t) = int u dx``.  For the |u|^p equation its
second derivative equals the integrated source, so along any solution with
nonnegative data

    G'' = e^{-n(p-1)Ht/2} int |u|^p dx >= C' e^{-n(p-1)t} G^p,

and for the derivative nonlinearity ``G'' >= C' e^{-n(p-1)Ht} |G'|^p``.
Nothing here proves those bounds; the ratios are measured and their
infimum reported as the empirical constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import TYPE_CHECKING

import numpy as np

from . import special
from .discretization import (
    RadialGrid,
    gradient_energy,
    integrate_volume,
    lp_norm,
    radial_derivative,
)
from .model import Kind, ModelParams, source

if TYPE_CHECKING:
    from .solver import WaveState


def functional_G(state: "WaveState", grid: RadialGrid, n: int) -> float:
    return integrate_volume(state.u, grid, n)


def functional_Gp(state: "WaveState", grid: RadialGrid, n: int) -> float:
    return integrate_volume(state.v, grid, n)


def functional_Gpp(state: "WaveState", grid: RadialGrid, params: ModelParams) -> float:
    """G'' from the semi-discrete identity: the Laplacian integrates to zero."""
    u_r = radial_derivative(state.u, grid)
    s = source(params, state.t, state.u, state.v, u_r)
    s[-1] = 0.0
    return integrate_volume(s, grid, params.n)


def functional_G1(state: "WaveState", grid: RadialGrid, params: ModelParams,
                  ctx: special.TestFunctionContext | None = None) -> float:
    """Pairing of u with psi2(t, .)."""
    if params.kind is not Kind.POWER_U:
        raise ValueError("G1 is defined for the |u|^p equation only")
    if ctx is None:
        ctx = special.TestFunctionContext(params.n, p=params.p, H=params.H)
    weight = _psi2_on_grid(state.t, grid, ctx)
    return integrate_volume(weight * state.u, grid, params.n)


def _psi2_on_grid(t, grid, ctx):
    key = (grid.r_max, grid.m, ctx)
    scaled = _PHI_CACHE.get(key)
    if scaled is None:
        scaled = special.phi1_scaled(grid.r, ctx)
        _PHI_CACHE.clear()
        _PHI_CACHE[key] = scaled
    return scaled * np.exp(grid.r - ctx.psi2_rate * t)


_PHI_CACHE: dict = {}


def modified_energy(state: "WaveState", grid: RadialGrid, n: int, H: float) -> float:
    """1/2 int (v^2 + e^{-2Ht} u_r^2) dx; the usual energy when H = 0."""
    kinetic = 0.5 * integrate_volume(state.v * state.v, grid, n)
    return kinetic + math.exp(-2.0 * H * state.t) * gradient_energy(state.u, grid, n)


@dataclass
class FunctionalSeries:
    """Samples of the spatial functionals at strictly increasing times."""

    t: list = field(default_factory=list)
    sup_u: list = field(default_factory=list)
    G: list = field(default_factory=list)
    Gp: list = field(default_factory=list)
    Gpp: list = field(default_factory=list)
    G1: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    lp_u: list = field(default_factory=list)
    lp_v: list = field(default_factory=list)
    sample_dt: float = float("nan")

    def append(self, row: dict) -> None:
        if self.t and not row["t"] > self.t[-1]:
            raise ValueError("series timestamps must be strictly increasing")
        for name in self.columns():
            getattr(self, name).append(row[name])

    @staticmethod
    def columns() -> tuple:
        return tuple(f.name for f in fields(FunctionalSeries) if f.name != "sample_dt")

    def __len__(self) -> int:
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)


def sample(state: "WaveState", grid: RadialGrid, params: ModelParams,
           ctx: special.TestFunctionContext | None = None) -> dict:
    n = params.n
    with_G1 = params.kind is Kind.POWER_U and params.H > 0
    return {
        "t": state.t,
        "sup_u": float(np.max(np.abs(state.u))),
        "G": functional_G(state, grid, n),
        "Gp": functional_Gp(state, grid, n),
        "Gpp": functional_Gpp(state, grid, params),
        "G1": functional_G1(state, grid, params, ctx) if with_G1 else float("nan"),
        "energy": modified_energy(state, grid, n, params.H),
        "lp_u": lp_norm(state.u, grid, n, params.p),
        "lp_v": lp_norm(state.v, grid, n, params.p),
    }


@dataclass
class ResidualReport:
    """Ratios of G'' to the right-hand side of the expected inequality."""

    t: np.ndarray
    ratio: np.ndarray
    inf_ratio: float
    nonpositive_G: int
    degenerate: bool
    growth_slope: float = float("nan")


def inequality_ratios(series: FunctionalSeries, params: ModelParams) -> np.ndarray:
    """rho1 = G''/(e^{-n(p-1)t} G^p) for |u|^p, rho2 = G''/(e^{-n(p-1)Ht}|G'|^p) otherwise."""
    t = series.array("t")
    Gpp = series.array("Gpp")
    n, p, H = params.n, params.p, params.H
    with np.errstate(divide="ignore", invalid="ignore"):
        if params.kind is Kind.POWER_GRAD:
            base = np.exp(-n * (p - 1) * H * t) * np.abs(series.array("Gp")) ** p
        else:
            G = series.array("G")
            base = np.exp(-n * (p - 1) * t) * np.abs(G) ** p
        return np.where(base > 0, Gpp / base, np.nan)


def inequality_residuals(series: FunctionalSeries, params: ModelParams,
                         window: tuple[float, float] | None = None) -> ResidualReport:
    """Measure the empirical constant of the averaged differential inequality.

    The reported infimum is taken over samples with ``G > 0``; samples with
    ``G <= 0`` are counted in ``nonpositive_G`` since they fall outside the
    setting of the inequality.  ``growth_slope`` is the log-log slope of
    ``G`` against ``1 + t`` over ``window`` (default: the whole series).
    """
    if len(series) < 2:
        raise ValueError("need at least two samples")
    t = series.array("t")
    G = series.array("G")
    ratio = inequality_ratios(series, params)
    if params.kind is Kind.LINEAR:
        ratio = np.zeros_like(t)
    nonpos = int(np.sum(G <= 0))
    good = np.isfinite(ratio) & (G > 0)
    inf_ratio = float(np.min(ratio[good])) if good.any() else float("nan")
    degenerate = bool(np.all(np.abs(series.array("Gpp")) == 0.0))
    lo, hi = window if window is not None else (t[0], t[-1])
    sel = (t >= lo) & (t <= hi) & (G > 0)
    slope = float("nan")
    if sel.sum() >= 2:
        slope = float(np.polyfit(np.log1p(t[sel]), np.log(G[sel]), 1)[0])
    return ResidualReport(t, ratio, inf_ratio, nonpos, degenerate, slope)


def convexity_check(series: FunctionalSeries | np.ndarray, tol: float | None = None,
                    t=None) -> int:
    """Count samples where the discrete second difference of G is below ``-tol``.

    Non-uniform sample spacing is handled with the three-point divided
    difference.  The default tolerance is ``1e-8 * max|G''|``.
    """
    if isinstance(series, FunctionalSeries):
        G, t = series.array("G"), series.array("t")
    else:
        G = np.asarray(series, dtype=float)
        t = np.arange(G.size, dtype=float) if t is None else np.asarray(t, dtype=float)
    if G.size < 3:
        raise ValueError("convexity check needs at least three samples")
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    d2 = 2.0 * ((G[2:] - G[1:-1]) / h1 - (G[1:-1] - G[:-2]) / h0) / (h0 + h1)
    if tol is None:
        tol = 1e-8 * float(np.max(np.abs(d2))) if d2.size else 0.0
    return int(np.sum(d2 < -tol))
