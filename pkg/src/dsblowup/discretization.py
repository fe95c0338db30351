"""Radial grid, finite-volume Laplacian and volume quadrature.

Nodes sit at ``r_i = i h`` for ``i = 0 .. m-1``.  Node ``i`` owns the shell
``[r_{i-1/2}, r_{i+1/2}]`` (clipped to ``[0, r_max]``), whose exact volume per
unit solid angle is ``(r_{i+1/2}^n - r_{i-1/2}^n) / n``.  The Laplacian is
written in flux form::

    (Δu)_i = (F_{i+1/2} - F_{i-1/2}) / V_i,   F_{i+1/2} = r_{i+1/2}^{n-1} (u_{i+1} - u_i) / h

This is the centred second-order stencil ``u_rr + (n-1)/r u_r`` away from
the origin, reduces to ``2n (u_1 - u_0)/h^2`` (``n u_rr`` with an even ghost
node) at ``r = 0``, reproduces ``Δ r^2 = 2n`` exactly and makes
``sum_i V_i (Δu)_i`` telescope to a boundary flux, so the integral of ``u``
picks up nothing from the Laplacian while the data stay off the boundary.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .special import sphere_area

MIN_NODES = 128


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    m: int

    def __post_init__(self):
        if self.m < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes, got {self.m}")
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")

    @classmethod
    def for_horizon(cls, T_max: float, m: int, margin_cells: int = 10,
                    H: float = 0.0) -> "RadialGrid":
        """Grid with ``r_max = 1 + cone_radius(T_max, H) + margin_cells * h``."""
        if m - 1 <= margin_cells:
            raise ValueError("too few nodes for the requested margin")
        return cls((1.0 + cone_radius(T_max, H)) * (m - 1) / (m - 1 - margin_cells), m)

    @property
    def h(self) -> float:
        return self.r_max / (self.m - 1)

    @property
    def r(self) -> np.ndarray:
        return _nodes(self.r_max, self.m)

    def horizon(self, H: float = 0.0) -> float:
        """Largest time for which the support ``r <= 1 + cone_radius(t, H)`` stays inside."""
        rho = self.r_max - 1.0
        if H == 0 or rho * H < 1:
            return rho if H == 0 else -math.log1p(-rho * H) / H
        return math.inf


def cone_radius(t: float, H: float) -> float:
    """Distance ``int_0^t e^{-Hs} ds`` travelled by a signal moving at speed e^{-Ht}."""
    if H == 0:
        return float(t)
    return -math.expm1(-H * t) / H


@functools.lru_cache(maxsize=32)
def _nodes(r_max, m):
    r = np.linspace(0.0, r_max, m)
    r.setflags(write=False)
    return r


@functools.lru_cache(maxsize=32)
def _geometry(r_max: float, m: int, n: int):
    """Solid-angle-normalised volumes ``V`` and face areas ``A`` (per unit angle)."""
    h = r_max / (m - 1)
    faces = (np.arange(m - 1) + 0.5) * h
    edges = np.concatenate(([0.0], faces, [r_max]))
    vol = (edges[1:] ** n - edges[:-1] ** n) / n
    area = faces ** (n - 1)
    vol.setflags(write=False)
    area.setflags(write=False)
    return vol, area


def volume_weights(grid: RadialGrid, n: int) -> np.ndarray:
    """Quadrature weights with ``sum_i w_i u_i ≈ int_{|x| <= r_max} u dx``."""
    vol, _ = _geometry(grid.r_max, grid.m, n)
    return sphere_area(n - 1) * vol


def laplacian(u: np.ndarray, grid: RadialGrid, n: int) -> np.ndarray:
    """Radial Laplacian; the last node is a homogeneous Dirichlet boundary."""
    vol, area = _geometry(grid.r_max, grid.m, n)
    flux = area * np.diff(u) / grid.h
    out = np.empty_like(u)
    out[0] = flux[0] / vol[0]
    out[1:-1] = (flux[1:] - flux[:-1]) / vol[1:-1]
    out[-1] = 0.0
    return out


def radial_derivative(u: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Centred ``u_r``; zero at the origin by even symmetry, one-sided at r_max."""
    h = grid.h
    du = np.empty_like(u)
    du[0] = 0.0
    du[1:-1] = (u[2:] - u[:-2]) / (2 * h)
    du[-1] = (u[-1] - u[-2]) / h
    return du


def integrate_volume(f: np.ndarray, grid: RadialGrid, n: int) -> float:
    return float(volume_weights(grid, n) @ f)


def gradient_energy(u: np.ndarray, grid: RadialGrid, n: int) -> float:
    """``1/2 int |u_r|^2 dx`` in the form that pairs with ``laplacian``."""
    _, area = _geometry(grid.r_max, grid.m, n)
    du = np.diff(u) / grid.h
    return 0.5 * sphere_area(n - 1) * grid.h * float(area @ (du * du))


def lp_norm(f: np.ndarray, grid: RadialGrid, n: int, p: float) -> float:
    return integrate_volume(np.abs(f) ** p, grid, n) ** (1.0 / p)
