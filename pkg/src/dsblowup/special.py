"""Exponential test functions built from the sphere average of e^{x.w}.

``phi1(x) = int_{S^{n-1}} e^{x.w} dw`` is radial, positive and solves
``Δphi1 = phi1``.  Reducing the sphere integral to the polar angle gives::

    phi1(r) = |S^{n-2}| int_0^pi e^{r cos θ} sin^{n-2}θ dθ

which is evaluated by Gauss-Legendre quadrature in θ.  Large radii are
handled through the scaled value ``phi1(r) e^{-r}``, whose integrand
``e^{r (cos θ - 1)}`` never overflows.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

# Largest r for which e^r is representable in double precision.
RAW_OVERFLOW_RADIUS = 709.0
_MAX_ORDER = 4096


def sphere_area(k: int) -> float:
    """Surface area of the unit sphere S^k embedded in R^{k+1}."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def ball_volume(n: int) -> float:
    return sphere_area(n - 1) / n


@functools.lru_cache(maxsize=None)
def _unit_rule(q: int):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


# Beyond theta = _PEAK_WIDTHS / sqrt(r) the factor e^{r(cos theta - 1)} is below e^{-72}.
_PEAK_WIDTHS = 12.0


@dataclass(frozen=True)
class TestFunctionContext:
    """Dimension, angular quadrature order and the (p, H) pair used by psi2."""

    __test__ = False  # not a pytest class

    n: int
    q: int = 64
    p: float | None = None
    H: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n}")
        if self.q < 16:
            raise ValueError(f"quadrature order must be >= 16, got {self.q}")

    @property
    def surface(self) -> float:
        """|S^{n-1}|, the value of phi1 at the origin."""
        return sphere_area(self.n - 1)

    @property
    def psi2_rate(self) -> float:
        if self.p is None or self.H is None:
            raise ValueError("psi2 needs both p and H in the context")
        if not self.p > 1:
            raise ValueError(f"psi2 needs p > 1, got {self.p}")
        if not self.H > 0:
            raise ValueError(f"psi2 is defined only for H > 0, got {self.H}")
        return self.n * (self.p - 1.0) * self.H / (2.0 * self.p) + 1.0


def _scaled_fixed(r: np.ndarray, n: int, q: int) -> np.ndarray:
    # The integrand concentrates at theta = 0 for large r, so the interval is
    # cut where it has decayed below double precision.
    x, w = _unit_rule(q)
    with np.errstate(divide="ignore"):
        top = np.minimum(math.pi, _PEAK_WIDTHS / np.sqrt(r))
    theta = np.multiply.outer(top, x)
    cos_m1 = -2.0 * np.sin(0.5 * theta) ** 2
    f = np.exp(r[:, None] * cos_m1)
    if n > 2:
        f *= np.sin(theta) ** (n - 2)
    return sphere_area(n - 2) * top * (f @ w)


def phi1_scaled(r, ctx: TestFunctionContext, rtol: float = 1e-13):
    """Return ``phi1(r) * exp(-r)``.

    The angular rule starts at ``ctx.q`` nodes and is doubled wherever the
    doubled rule moves the value by more than ``rtol`` (relative).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("phi1 is evaluated at radii r >= 0")
    flat = r.ravel()
    out = np.empty_like(flat)
    todo = np.arange(flat.size)
    q = ctx.q
    coarse = _scaled_fixed(flat, ctx.n, q)
    while todo.size:
        if 2 * q > _MAX_ORDER:
            raise ArithmeticError(
                f"angular quadrature did not converge at {_MAX_ORDER} nodes"
            )
        fine = _scaled_fixed(flat[todo], ctx.n, 2 * q)
        ok = np.abs(fine - coarse) <= rtol * np.abs(fine)
        out[todo[ok]] = fine[ok]
        todo, coarse = todo[~ok], fine[~ok]
        q *= 2
    # Exact limit at the origin, where the integrand is identically 1.
    out[flat == 0.0] = ctx.surface
    return out.reshape(r.shape) if r.ndim else float(out[0])


def phi1(r, ctx: TestFunctionContext):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr > RAW_OVERFLOW_RADIUS):
        raise OverflowError(
            f"phi1(r) overflows for r > {RAW_OVERFLOW_RADIUS}; use phi1_scaled"
        )
    return phi1_scaled(r_arr, ctx) * np.exp(r_arr) if r_arr.ndim else (
        phi1_scaled(float(r_arr), ctx) * math.exp(float(r_arr))
    )


def psi1(t, r, ctx: TestFunctionContext):
    if np.any(np.asarray(t) < 0):
        raise ValueError("psi1 is defined for t >= 0")
    return np.exp(-np.asarray(t, dtype=float)) * phi1(r, ctx)


def psi2(t, r, ctx: TestFunctionContext):
    rate = ctx.psi2_rate
    if np.any(np.asarray(t) < 0):
        raise ValueError("psi2 is defined for t >= 0")
    return np.exp(-rate * np.asarray(t, dtype=float)) * phi1(r, ctx)


def psi2_from_scaled(t: float, r, ctx: TestFunctionContext):
    """psi2 via the scaled evaluator; safe for large r as long as r - rate*t is moderate."""
    return phi1_scaled(r, ctx) * np.exp(np.asarray(r, dtype=float) - ctx.psi2_rate * t)


@dataclass(frozen=True)
class EigenfunctionCheck:
    residual: float
    h: float
    coarse: bool


def verify_eigenfunction(r_grid, ctx: TestFunctionContext, values=None) -> EigenfunctionCheck:
    """Check ``Δphi1 = phi1`` with centred differences on a uniform grid.

    The residual ``|phi'' + (n-1)/r phi' - phi|`` is divided by ``phi`` at
    each node (phi1 grows like e^r, so the absolute residual is meaningless
    across a wide radius range) and the maximum over interior nodes is
    returned.  ``values`` overrides phi1 with another field sampled on
    ``r_grid``.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size < 3:
        raise ValueError("need a 1-D grid with at least three nodes")
    h = r[1] - r[0]
    if not np.allclose(np.diff(r), h, rtol=1e-9, atol=0):
        raise ValueError("r_grid must be uniform")
    if r[0] <= 0:
        raise ValueError("r_grid must avoid the origin (use a half-cell offset)")
    if values is None:
        # Scaled values keep the stencil well conditioned: with
        # phi = s e^r, Δphi - phi = e^r (s'' + 2s' + (n-1)/r (s' + s)).
        s = phi1_scaled(r, ctx)
        d1 = (s[2:] - s[:-2]) / (2 * h)
        d2 = (s[2:] - 2 * s[1:-1] + s[:-2]) / h**2
        ri = r[1:-1]
        res = np.abs(d2 + 2 * d1 + (ctx.n - 1) / ri * (d1 + s[1:-1])) / s[1:-1]
    else:
        f = np.asarray(values, dtype=float)
        d1 = (f[2:] - f[:-2]) / (2 * h)
        d2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
        ri = r[1:-1]
        res = np.abs(d2 + (ctx.n - 1) / ri * d1 - f[1:-1]) / np.abs(f[1:-1])
    return EigenfunctionCheck(float(res.max()), float(h), bool(h > 0.1))


def lemma23_integral(t: float, ctx: TestFunctionContext, p: float | None = None,
                     radius: float | None = None, epsabs: float = 0.0,
                     epsrel: float = 1e-11) -> float:
    """Integral of psi1(t, .)^{p/(p-1)} over the ball of radius ``t + 1``.

    ``radius`` replaces the support radius ``t + 1`` when given.
    """
    p = ctx.p if p is None else p
    if p is None or not p > 1:
        raise ValueError(f"need p > 1, got {p}")
    if t < 0:
        raise ValueError("t must be >= 0")
    R = t + 1.0 if radius is None else radius
    expo = p / (p - 1.0)
    n = ctx.n

    def integrand(r):
        # (e^{-t} phi1)^expo = (phi1_scaled * e^{r - t})^expo
        return (phi1_scaled(r, ctx) * math.exp(r - t)) ** expo * r ** (n - 1)

    out = integrate.quad(integrand, 0.0, R, epsabs=epsabs, epsrel=epsrel,
                         limit=200, full_output=True)
    val, err = out[0], out[1]
    if len(out) > 3 or err > max(epsabs, 1e3 * epsrel * abs(val)):
        raise ArithmeticError(
            f"radial quadrature failed at t={t}: value {val}, error estimate {err}"
        )
    return ctx.surface * val


def lemma23_bound_exponent(n: int, p: float) -> float:
    """Exponent of (1+t) in the growth bound for ``lemma23_integral``."""
    return n - 1 - (n - 1) * p / (2.0 * (p - 1.0))


def asymptotic_constant(r, ctx: TestFunctionContext):
    """phi1(r) r^{(n-1)/2} e^{-r}; tends to (2 pi)^{(n-1)/2} as r grows."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("asymptotic_constant needs r > 0")
    out = phi1_scaled(r, ctx) * r ** ((ctx.n - 1) / 2)
    return out if r.ndim else float(out)
