"""Equation parameters and closed-form exponent algebra.

Two semilinear wave equations on de Sitter space are covered, written in
comoving coordinates with Hubble constant ``H``::

    u_tt - e^{-2Ht} Δu = e^{-n(p-1)Ht/2} |u|^p                    (POWER_U)
    u_tt - e^{-2Ht} Δu = e^{-n(p-1)Ht/2} (|u_t|^p + |∇u|^p)       (POWER_GRAD)

``LINEAR`` drops the right-hand side.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Kind(str, enum.Enum):
    POWER_U = "PowerU"
    POWER_GRAD = "PowerGrad"
    LINEAR = "Linear"


@dataclass(frozen=True)
class ModelParams:
    n: int
    H: float
    p: float
    kind: Kind = Kind.POWER_U

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n}")
        if not self.p > 1:
            raise ValueError(f"exponent p must exceed 1, got {self.p}")
        if not self.H >= 0:
            raise ValueError(f"Hubble constant H must be >= 0, got {self.H}")

    @property
    def cosmological_constant(self) -> float:
        return 3.0 * self.H**2

    def source_weight(self, t):
        """Time weight e^{-n(p-1)Ht/2} in front of the nonlinearity."""
        return math.exp(-0.5 * self.n * (self.p - 1.0) * self.H * t)

    def derived(self) -> "DerivedConstants":
        return derived_constants(self)

    def to_dict(self) -> dict:
        return {"n": self.n, "H": self.H, "p": self.p, "kind": self.kind.value}


@dataclass(frozen=True)
class DerivedConstants:
    """Growth exponent ``a1``, decay rate ``b1`` and amplitude ``A``.

    ``A`` is the criterion amplitude; the proofs only fix it up to an
    unspecified positive constant, so it defaults to 1 here and is meant to
    be replaced by a measured value when one is available.
    """

    a1: float
    b1: float
    A: float = 1.0


def derived_constants(params: ModelParams, A: float = 1.0) -> DerivedConstants:
    n, p, H = params.n, params.p, params.H
    if params.kind is Kind.POWER_U:
        return DerivedConstants((n - 1) * (1 - p / 2) + 2, n * (p - 1), A)
    if params.kind is Kind.POWER_GRAD:
        return DerivedConstants(n * H / 2, n * (p - 1) * H / 2 + 1, A)
    raise ValueError("linear equations have no blow-up constants")


def _check_dimension(n):
    if int(n) != n or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n}")


def strauss_exponent(n: int) -> float:
    """Positive root of (n-1)p^2 - (n+1)p - 2 = 0."""
    _check_dimension(n)
    a, b, c = n - 1.0, -(n + 1.0), -2.0
    # b < 0, so -b + sqrt(disc) has no cancellation; the other root is c/(a*q).
    q = 0.5 * (-b + math.sqrt(b * b - 4.0 * a * c))
    return q / a


def glassey_exponent(n: int) -> float:
    _check_dimension(n)
    return 1.0 + 2.0 / (n - 1)


def lifespan_exponent_strauss(n: int, p: float) -> float:
    """Exponent gamma in T(eps) <= C eps^{-gamma} for the |u|^p equation."""
    _check_dimension(n)
    pc = strauss_exponent(n)
    if not 1.0 < p < pc:
        raise ValueError(f"p={p} outside the subcritical range (1, {pc})")
    denom = (p - 1.0) * (1.0 - (n - 1) * p / 2.0) + 2.0
    if not denom > 0:
        raise ValueError(f"non-positive denominator {denom} at p={p}")
    return (p - 1.0) / denom


def lifespan_exponent_glassey(p: float) -> float:
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    return p - 1.0


def kato_condition(a1: float, b1: float, p: float) -> bool:
    """True iff b1 - a1 (p-1) < 2."""
    return b1 - a1 * (p - 1.0) < 2.0


def epsilon_window(a1: float, b1: float, p: float) -> tuple[float, float]:
    """Amplitude window [2^{-D/(p-1)}, 1] with D = (p-1) a1 - b1 + 2."""
    denom = (p - 1.0) * a1 - b1 + 2.0
    if not denom > 0:
        raise ValueError(f"(p-1)a1 - b1 + 2 = {denom} must be positive")
    return 2.0 ** (-denom / (p - 1.0)), 1.0


def theoretical_lifespan_exponent(params: ModelParams) -> float:
    if params.kind is Kind.POWER_U:
        return lifespan_exponent_strauss(params.n, params.p)
    if params.kind is Kind.POWER_GRAD:
        return lifespan_exponent_glassey(params.p)
    raise ValueError("linear equations have no lifespan exponent")


def source(params: ModelParams, t: float, u, v, u_r):
    """Right-hand side nonlinearity evaluated on nodal arrays.

    ``|∇u|`` is taken as ``|u_r|``, which is exact for radial fields.
    """
    if params.kind is Kind.LINEAR:
        return np.zeros_like(u)
    w = params.source_weight(t)
    if params.kind is Kind.POWER_U:
        return w * np.abs(u) ** params.p
    return w * (np.abs(v) ** params.p + np.abs(u_r) ** params.p)
