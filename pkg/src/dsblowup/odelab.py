"""Kato-type blow-up criteria for ``G'' >= A e^{-b1 (t+R)} |G|^p``.

The lab integrates the equality case, applies the amplitude rescaling used
to turn blow-up into a lifespan bound, evaluates the feasibility integral of
the generalised criterion with weights ``a(t)``, ``b(t)``, and maps the
blow-up/survival region over a parameter grid.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special as sps


class OdeStatus(str, Enum):
    BLEW_UP = "BlewUp"
    SURVIVED = "Survived"
    FAILED = "Failure"


@dataclass(frozen=True)
class KatoProblem:
    A: float
    b1: float
    R: float
    p: float
    G0: float
    G0p: float

    def __post_init__(self):
        if not self.A >= 0:
            raise ValueError(f"amplitude A must be >= 0, got {self.A}")
        if not self.R >= 0:
            raise ValueError(f"shift R must be >= 0, got {self.R}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not (self.G0 > 0 and self.G0p > 0):
            raise ValueError("initial data must satisfy G(0) > 0 and G'(0) > 0")

    def coefficient(self, t):
        return self.A * np.exp(-self.b1 * (np.asarray(t, dtype=float) + self.R))


@dataclass
class KatoResult:
    status: OdeStatus
    T_star: float
    t: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    Gp: np.ndarray = field(repr=False)
    steps: int = 0

    def impulse(self) -> float:
        """Total change of G' along the trajectory."""
        return float(self.Gp[-1] - self.Gp[0])


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_kato_ode(prob: KatoProblem, T_max: float = 1e3, G_max: float = 1e12,
                       rtol: float = 1e-12, first_step: float = 1e-3,
                       n_fit: int = 10, max_steps: int = 2_000_000) -> KatoResult:
    """Integrate ``G'' = A e^{-b1(t+R)} G^p`` from ``(G0, G0p)``.

    RK4 with step-doubling error control; the step is halved whenever the
    local error estimate exceeds ``rtol`` relative to the state, which
    happens continually as ``G`` runs away.  Blow-up is declared once
    ``G > G_max`` and the blow-up time is extrapolated as the zero of a
    least-squares line through ``G^{-(p-1)/2}`` over the last ``n_fit``
    accepted points.
    """
    A, b1, R, p = prob.A, prob.b1, prob.R, prob.p

    def f(t, y):
        return np.array([y[1], A * math.exp(-b1 * (t + R)) * abs(y[0]) ** p])

    t, y, h = 0.0, np.array([prob.G0, prob.G0p], dtype=float), first_step
    ts, Gs, Gps = [t], [y[0]], [y[1]]
    steps = 0
    status = OdeStatus.SURVIVED
    with np.errstate(over="ignore", invalid="ignore"):
        while t < T_max:
            if steps >= max_steps:
                status = OdeStatus.FAILED
                break
            h = min(h, T_max - t)
            if h < 1e-15 * max(1.0, t):
                status = OdeStatus.FAILED
                break
            full = _rk4(f, t, y, h)
            half = _rk4(f, t + h / 2, _rk4(f, t, y, h / 2), h / 2)
            diff = half - full
            scale = rtol * np.maximum(np.abs(half), 1e-300)
            err = float(np.max(np.abs(diff) / 15.0 / scale)) if np.all(np.isfinite(half)) else math.inf
            if err > 1.0:
                h *= 0.5 if not math.isfinite(err) else max(0.1, 0.9 * err ** -0.2)
                continue
            t += h
            y = half + diff / 15.0
            steps += 1
            ts.append(t)
            Gs.append(y[0])
            Gps.append(y[1])
            if y[0] > G_max:
                status = OdeStatus.BLEW_UP
                break
            h *= min(2.0, 0.9 * err ** -0.2) if err > 0 else 2.0

    t_arr, G_arr, Gp_arr = np.array(ts), np.array(Gs), np.array(Gps)
    T_star = float("nan")
    if status is OdeStatus.BLEW_UP:
        k = min(n_fit, t_arr.size)
        tt = t_arr[-k:]
        w = G_arr[-k:] ** (-(p - 1) / 2)
        slope, intercept = np.polyfit(tt - tt[-1], w, 1)
        T_star = float(tt[-1] - intercept / slope)
    return KatoResult(status, T_star, t_arr, G_arr, Gp_arr, steps)


@dataclass(frozen=True)
class RescaledProblem:
    """The problem seen in the stretched time ``tau = eps^kappa t``.

    With ``D = (p-1) a1 - b1 + 2`` and ``kappa = (p-1)/D`` the stretched
    unknown ``calG(tau) = eps^{(b1-2)/D} G(tau eps^{-kappa})`` satisfies the
    same kind of ODE with amplitude ``A eps^{-b1 kappa}``, rate
    ``b1 eps^{-kappa}`` and shift ``R eps^kappa``.
    """

    eps: float
    a1: float
    original: KatoProblem
    problem: KatoProblem
    kappa: float
    time_scale: float
    amplitude_scale: float

    def to_original_time(self, tau):
        return np.asarray(tau, dtype=float) / self.time_scale

    def coefficient(self, tau):
        """Coefficient of ``|calG|^p`` in the stretched equation."""
        return self.problem.coefficient(tau)

    def reference_coefficient(self, tau):
        """``A e^{-b1 (tau + R)}``, the coefficient the stretched problem is compared to."""
        return self.original.coefficient(tau)

    def coefficient_ratio(self, tau):
        return self.coefficient(tau) / self.reference_coefficient(tau)

    def comparison_horizon(self) -> float:
        """Largest tau at which the stretched coefficient still dominates.

        The ratio is ``eps^{-b1 kappa} exp(-b1 tau (eps^{-kappa} - 1))``; it
        starts above 1 and decays, crossing 1 at the returned time.  For
        ``eps = 1`` or ``b1 = 0`` the ratio is identically 1 and the horizon
        is infinite.  Assumes ``b1 >= 0``.
        """
        s = 1.0 / self.time_scale
        b1 = self.original.b1
        if b1 == 0 or s == 1.0:
            return math.inf
        return math.log(s) / (s - 1.0)


def rescale_problem(eps: float, a1: float, prob: KatoProblem,
                    check_window: bool = True) -> RescaledProblem:
    p, b1 = prob.p, prob.b1
    D = (p - 1.0) * a1 - b1 + 2.0
    if not D > 0:
        raise ValueError(f"(p-1)a1 - b1 + 2 = {D} must be positive")
    lo = 2.0 ** (-D / (p - 1.0))
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if check_window and eps < lo:
        raise ValueError(f"eps={eps} below the admissible window [{lo:.6g}, 1]")
    kappa = (p - 1.0) / D
    ts = eps**kappa
    amp = eps ** ((b1 - 2.0) / D)
    new = KatoProblem(
        A=prob.A * eps ** (-b1 * kappa),
        b1=b1 / ts,
        R=prob.R * ts,
        p=p,
        G0=amp * prob.G0,
        G0p=amp * prob.G0p / ts,
    )
    return RescaledProblem(eps, a1, prob, new, kappa, ts, amp)


@dataclass(frozen=True)
class PowerExp:
    """``scale * t^alpha * e^{beta t}`` with alpha, beta >= 0 (not both zero)."""

    alpha: float = 0.0
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ValueError("weight must be strictly increasing: alpha, beta >= 0, not both 0")
        if not self.scale > 0:
            raise ValueError("weight scale must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.scale * t**self.alpha * np.exp(self.beta * t)

    def log(self, t):
        t = np.asarray(t, dtype=float)
        return math.log(self.scale) + self.alpha * np.log(t) + self.beta * t


def power(alpha: float) -> PowerExp:
    return PowerExp(alpha=alpha)


def exponential(beta: float) -> PowerExp:
    return PowerExp(beta=beta)


@dataclass(frozen=True)
class GeneralizedWeights:
    a: PowerExp
    b: PowerExp

    def combined(self, t, p: float, delta: float, R: float):
        """``b(t+R)^{-1/2} a(t)^{(p-1)/2 - delta}``, the feasibility integrand."""
        q = (p - 1.0) / 2.0 - delta
        return np.exp(q * self.a.log(t) - 0.5 * self.b.log(np.asarray(t) + R))

    def validate(self, p: float, delta: float, R: float, t_grid) -> dict:
        t = np.asarray(t_grid, dtype=float)
        a, b = self.a(t), self.b(t + R)
        c = self.combined(t, p, delta, R)
        return {
            "positive": bool(np.all(a > 0) and np.all(b > 0)),
            "increasing": bool(np.all(np.diff(a) > 0) and np.all(np.diff(b) > 0)),
            "combined_decreasing": bool(np.all(np.diff(c) < 0)),
        }


@dataclass(frozen=True)
class KatoHypothesis:
    K: float
    a1: float
    T0: float
    T1: float
    delta: float
    K0: float
    p: float

    def __post_init__(self):
        if not 0 < self.delta < (self.p - 1) / 2:
            raise ValueError(f"delta must lie in (0, (p-1)/2), got {self.delta}")
        if not (self.K > 0 and self.K0 > 0 and self.T1 > 0):
            raise ValueError("K, K0 and T1 must be positive")

    def check_shift(self, R: float) -> None:
        if self.T0 < R:
            raise ValueError(f"T0={self.T0} must be >= R={R}")


def _tail_majorant(weights: GeneralizedWeights, p, delta, R, T) -> float:
    """Closed-form upper bound of the feasibility integral over ``[T, inf)``."""
    q = (p - 1.0) / 2.0 - delta
    a, b = weights.a, weights.b
    lam = 0.5 * b.beta - q * a.beta
    # (s+R)^{-alpha_b/2} <= s^{-alpha_b/2} for s > 0.
    k = q * a.alpha - 0.5 * b.alpha
    c = a.scale**q * b.scale**-0.5 * math.exp(-0.5 * b.beta * R)
    if lam > 0:
        if k > -1:
            return c * lam ** (-k - 1) * math.gamma(k + 1) * sps.gammaincc(k + 1, lam * T)
        return c * T**k * math.exp(-lam * T) / lam
    if lam == 0 and k < -1:
        return c * T ** (k + 1) / (-(k + 1))
    return math.inf


def weight_integral(weights: GeneralizedWeights, p: float, delta: float, R: float,
                    lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    val, err, *rest = integrate.quad(
        lambda s: float(weights.combined(s, p, delta, R)), lo, hi,
        epsabs=0.0, epsrel=1e-12, limit=500, full_output=True,
    )
    if rest and len(rest) > 1:
        raise ArithmeticError(f"quadrature failed on [{lo}, {hi}]: {rest[1]}")
    return val


@dataclass
class FeasibilityResult:
    t_star: float | None
    threshold: float
    integral_at_star: float
    integral_bound: float
    flags: dict
    cell: float

    @property
    def feasible(self) -> bool:
        return self.t_star is not None


def feasibility_threshold(weights: GeneralizedWeights, hyp: KatoHypothesis, A: float) -> float:
    """Left-hand side of the feasibility inequality, raised to the power (p-1)/2.

    Comparing ``I(t)`` with this value is equivalent to comparing
    ``I(t)^{2/(p-1)}`` with the original left-hand side.
    """
    p, d = hyp.p, hyp.delta
    lhs = (d ** (2 / (p - 1)) * (A / (p + 1)) ** (1 / (p - 1)) / hyp.K0
           * float(weights.a(2 * hyp.T1)) ** (2 * d / (p - 1)))
    return lhs ** ((p - 1) / 2)


def lemma22_feasible(weights: GeneralizedWeights, hyp: KatoHypothesis, A: float, R: float,
                     t_search_max: float, n_cells: int = 256) -> FeasibilityResult:
    """Smallest ``t** in (2 T1, t_search_max]`` satisfying the feasibility inequality.

    ``I(t)`` is accumulated cell by cell over a uniform partition of
    ``[2 T1, t_search_max]`` and the crossing is then located inside its
    cell by root finding.  Before searching, ``I(inf)`` is bounded by
    ``I(t_search_max)`` plus a closed-form tail majorant; if even that bound
    stays below the threshold, no ``t**`` exists at any time and ``None`` is
    returned.
    """
    hyp.check_shift(R)
    p, d = hyp.p, hyp.delta
    lo = 2.0 * hyp.T1
    if not t_search_max > lo:
        raise ValueError("t_search_max must exceed 2*T1")
    flags = weights.validate(p, d, R, np.linspace(lo, t_search_max, 512))
    if not (flags["positive"] and flags["increasing"]):
        raise ValueError(f"weights violate the hypotheses: {flags}")
    target = feasibility_threshold(weights, hyp, A)
    edges = np.linspace(lo, t_search_max, n_cells + 1)
    pieces = [weight_integral(weights, p, d, R, a, b) for a, b in zip(edges[:-1], edges[1:])]
    cum = np.concatenate(([0.0], np.cumsum(pieces)))
    bound = cum[-1] + _tail_majorant(weights, p, d, R, t_search_max)
    cell = edges[1] - edges[0]
    hit = np.nonzero(cum[1:] >= target)[0]
    if hit.size == 0:
        return FeasibilityResult(None, target, float(cum[-1]), bound, flags, cell)
    i = int(hit[0])
    if target <= 0:
        return FeasibilityResult(lo, target, 0.0, bound, flags, cell)
    a = edges[i]
    t_star = optimize.brentq(
        lambda s: cum[i] + weight_integral(weights, p, d, R, a, s) - target,
        a, edges[i + 1], xtol=1e-14, rtol=1e-14,
    )
    return FeasibilityResult(t_star, target, target, bound, flags, cell)


def lemma21_integral(a1: float, b1: float, p: float, delta: float, R: float,
                     lo: float, hi: float) -> float:
    """``int_lo^hi e^{-b1(s+R)/2} s^{a1((p-1)/2 - delta)} ds`` via incomplete gamma functions."""
    k = a1 * ((p - 1) / 2 - delta)
    if b1 == 0:
        return (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
    lam = b1 / 2
    upper = sps.gammaincc(k + 1, lam * lo) - sps.gammaincc(k + 1, lam * hi)
    return math.exp(-lam * R) * lam ** (-k - 1) * math.gamma(k + 1) * upper


@dataclass
class RegionCell:
    index: tuple
    p: float
    b1: float
    status: str
    T_star: float
    error: str = ""


def _run_cell(args):
    idx, prob, T_max, G_max = args
    try:
        res = integrate_kato_ode(prob, T_max=T_max, G_max=G_max)
        return RegionCell(idx, prob.p, prob.b1, res.status.value, res.T_star)
    except Exception as exc:  # noqa: BLE001 - one bad cell must not abort the map
        return RegionCell(idx, prob.p, prob.b1, OdeStatus.FAILED.value, float("nan"), repr(exc))


def blowup_region_map(p_values, b1_values, A: float = 1.0, R: float = 0.0,
                      G0: float = 1.0, G0p: float = 1.0, T_max: float = 1e3,
                      G_max: float = 1e12, workers: int | None = None) -> list[RegionCell]:
    """Classify every ``(p, b1)`` cell as blow-up or survival.

    Cells are returned in row-major order of ``(p, b1)`` regardless of the
    order in which workers finish.
    """
    base = KatoProblem(A=A, b1=0.0, R=R, p=2.0, G0=G0, G0p=G0p)
    jobs = []
    for i, p in enumerate(p_values):
        for j, b1 in enumerate(b1_values):
            jobs.append(((i, j), replace(base, p=float(p), b1=float(b1)), T_max, G_max))
    workers = workers if workers is not None else int(os.environ.get("DSBLOWUP_WORKERS") or os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(job) for job in jobs]
    return cells
