"""Shared 1D discretization of the weighted boundary-normal problems.

Everything downstream (eigenvalues, profiles, cost functions, layer
energies, disc rings) is built on one quadratic form

    Q[f] = sum_cells w_{j+1/2} (f_{j+1} - f_j)^2 / h + sum_j m_j V_j f_j^2,
    m_j  = c_j h w_j,   c = (1/2, 1, ..., 1, 1/2),

with w(t) = 1 - eps*k*t.  Its gradient is the central-difference operator
-(1/w)(w f')' with ghost-point Neumann rows, so every "equation" used in
the package is the exact gradient of a sampled functional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when the weight 1 - eps*k*t is not positive on the grid."""


class RegimeError(ValueError):
    """Raised when b lies outside the surface superconductivity window."""


class SolverError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


# Half-line truncation used whenever eps == 0.
HALF_LINE_T = 12.0


def interval_length(eps: float, c0: float) -> float:
    """Right end t_eps = c0 |log eps| of the boundary-layer interval."""
    if eps <= 0.0:
        return HALF_LINE_T
    return c0 * abs(np.log(eps))


@dataclass(frozen=True)
class WeightedGrid:
    """Uniform grid on [0, T] with the curvature weight attached."""

    t: np.ndarray
    h: float
    w: np.ndarray       # w(t_j)
    w_mid: np.ndarray   # w at cell midpoints
    c: np.ndarray       # trapezoid coefficients
    k: float
    eps: float

    @property
    def n(self) -> int:
        return self.t.size

    @property
    def mass(self) -> np.ndarray:
        """Diagonal of the weighted mass matrix, c_j h w_j."""
        return self.c * self.h * self.w

    def integrate(self, values: np.ndarray) -> float:
        """Weighted trapezoid integral of sampled values, int w g dt."""
        return float(np.sum(self.mass * values))


def make_grid(length: float, n_points: int, k: float = 0.0, eps: float = 0.0) -> WeightedGrid:
    if n_points < 3:
        raise ValueError("need at least 3 grid points")
    if length <= 0.0:
        raise ValueError("interval length must be positive")
    t = np.linspace(0.0, length, n_points)
    h = length / (n_points - 1)
    w = 1.0 - eps * k * t
    t_mid = 0.5 * (t[1:] + t[:-1])
    w_mid = 1.0 - eps * k * t_mid
    if np.any(w <= 0.0):
        raise DomainError(
            f"weight 1 - eps*k*t is not positive: eps*k*t_max = {eps * k * length:.4f}"
        )
    c = np.ones(n_points)
    c[0] = c[-1] = 0.5
    return WeightedGrid(t=t, h=h, w=w, w_mid=w_mid, c=c, k=k, eps=eps)


def potential(t: np.ndarray, alpha: float, k: float, eps: float) -> np.ndarray:
    """V_{k,alpha}(t) = ((t + alpha - eps k t^2 / 2) / (1 - eps k t))^2."""
    num = t + alpha - 0.5 * eps * k * t * t
    return (num / (1.0 - eps * k * t)) ** 2


def momentum_density(t: np.ndarray, alpha: float, k: float, eps: float) -> np.ndarray:
    """(t + alpha - eps k t^2 / 2) / (1 - eps k t): half of d V / d alpha times w."""
    return (t + alpha - 0.5 * eps * k * t * t) / (1.0 - eps * k * t)


def stiffness_bands(grid: WeightedGrid) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the kinetic stiffness matrix.

    (K f)_j = [w_{j-1/2}(f_j - f_{j-1}) - w_{j+1/2}(f_{j+1} - f_j)] / h, with the
    missing neighbour dropped at the two ends (free, i.e. Neumann, ends).
    """
    e = grid.w_mid / grid.h
    d = np.zeros(grid.n)
    d[:-1] += e
    d[1:] += e
    return d, -e


def apply_stiffness(grid: WeightedGrid, f: np.ndarray) -> np.ndarray:
    flux = grid.w_mid * np.diff(f, axis=0) / grid.h
    out = np.zeros_like(f)
    out[:-1] -= flux
    out[1:] += flux
    return out


def kinetic(grid: WeightedGrid, f: np.ndarray) -> float:
    return float(np.sum(grid.w_mid * np.diff(f) ** 2) / grid.h)
