"""Amplitude sweeps of the PDE solver and power-law fits of the lifespan."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..discretization import RadialGrid
from ..model import ModelParams
from ..solver import InitialDataSpec, Status, evolve_until_blowup
from .config import SweepConfig

log = logging.getLogger(__name__)

WORKERS_ENV = "DSBLOWUP_WORKERS"


@dataclass
class SweepRecord:
    n: int
    H: float
    p: float
    kind: str
    epsilon: float
    m: int
    dt: float
    status: str
    T_est: float
    T_err: float
    peak_sup: float


@dataclass
class SweepResult:
    config: SweepConfig
    records: list
    series: dict = field(default_factory=dict)
    support_leak: float = 0.0

    def lifespan_points(self) -> list[tuple[float, float]]:
        """``(eps, T_est)`` on the finest grid for every blown-up amplitude."""
        finest = max(self.config.refinements)
        return [(r.epsilon, r.T_est) for r in self.records
                if r.m == finest and r.status == Status.BLEW_UP.value]


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_cell(job):
    params, spec, m, controls = job
    grid = RadialGrid.for_horizon(controls.T_max, m, H=params.H)
    rep = evolve_until_blowup(params, spec, grid, controls)
    rep.final_state = None
    return rep


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> SweepResult:
    """Evolve every (epsilon, refinement) cell; failures are recorded, never raised."""
    for msg in cfg.warnings:
        log.warning(msg)
    jobs = [(cfg.model, InitialDataSpec(eps, cfg.k_f, cfg.k_g), m, cfg.controls)
            for eps in cfg.epsilons for m in cfg.refinements]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_safe_cell, jobs))
    else:
        reports = [_safe_cell(job) for job in jobs]

    params = cfg.model
    records, series, leak = [], {}, 0.0
    for i, eps in enumerate(cfg.epsilons):
        prev = None
        for j, m in enumerate(cfg.refinements):
            rep = reports[i * len(cfg.refinements) + j]
            if isinstance(rep, str):
                records.append(_record(params, eps, m, math.nan, Status.FAILED.value,
                                       math.nan, math.nan, math.nan))
                log.error("cell eps=%g m=%d failed: %s", eps, m, rep)
                prev = None
                continue
            err = math.nan
            if prev is not None and prev.status is rep.status is Status.BLEW_UP:
                err = abs(rep.T_est - prev.T_est)
            records.append(_record(params, eps, m, rep.dt, rep.status.value,
                                   rep.T_est, err, rep.peak_sup))
            leak = max(leak, rep.support_leak)
            prev = rep
        if prev is not None:
            series[eps] = prev.series
    return SweepResult(cfg, records, series, leak)


def _safe_cell(job):
    try:
        return _run_cell(job)
    except Exception as exc:  # noqa: BLE001 - a sweep never aborts on one cell
        return repr(exc)


def _record(params: ModelParams, eps, m, dt, status, T_est, T_err, peak) -> SweepRecord:
    return SweepRecord(params.n, params.H, params.p, params.kind.value, eps, m, dt,
                       status, T_est, T_err, peak)


@dataclass
class FitResult:
    """Least-squares fit ``log T = intercept + slope * log eps``."""

    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray
    n_points: int

    @property
    def exponent(self) -> float:
        return -self.slope

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)


def fit_power_law(points) -> FitResult:
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("power-law fit needs at least three (eps, T) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("power-law fit needs finite positive eps and T")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    design = np.column_stack([np.ones_like(x), x])
    (intercept, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, resid, int(pts.shape[0]))


def is_monotone_lifespan(points) -> bool:
    """T non-decreasing as eps decreases."""
    pts = sorted(points, key=lambda e_t: -e_t[0])
    return all(b[1] >= a[1] for a, b in zip(pts, pts[1:]))
