"""Ground states of the half-line oscillator and of its curved variant.

Two operators are handled:

* the shifted oscillator  -d^2/dt^2 + (t + alpha)^2  on [0, T], Neumann at 0
  and Dirichlet at T, whose minimum over alpha is the de Gennes constant;
* the curved operator  -d^2/dt^2 - (eps k / (1 - eps k t)) d/dt + V_{k,alpha}
  on [0, c0 |log eps|], Neumann at both ends, self-adjoint in the weighted
  space L^2((1 - eps k t) dt).

Both are discretized through the shared quadratic form in ``discrete`` and
solved as symmetric tridiagonal problems.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.linalg.lapack import dgttrf, dgttrs
from scipy.optimize import brentq

from .discrete import (
    HALF_LINE_T,
    SolverError,
    interval_length,
    make_grid,
    momentum_density,
    potential,
    stiffness_bands,
)

log = logging.getLogger(__name__)

EIG_TOL = 1e-12
EIG_MAXITER = 500


@dataclass(frozen=True)
class OscillatorSpec:
    alpha: float
    truncation_T: float = HALF_LINE_T
    n_points: int = 8193

    def __post_init__(self):
        if self.truncation_T <= 0:
            raise ValueError("truncation_T must be positive")
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16")


@dataclass(frozen=True)
class CurvedOperatorSpec:
    k: float
    alpha: float
    eps: float
    c0: float = 4.0
    n_points: int = 2048

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("curvature must be non-negative")
        if self.eps < 0 or (self.eps == 0 and self.k != 0):
            raise ValueError("eps = 0 is only allowed with k = 0")
        if self.eps >= 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.c0 <= 0 or self.n_points < 16:
            raise ValueError("c0 must be positive and n_points >= 16")

    @property
    def length(self) -> float:
        return interval_length(self.eps, self.c0)


@dataclass
class SpectralResult:
    mu: float
    phi: np.ndarray
    residual: float
    t: np.ndarray
    iterations: int = 0
    dmu_dalpha: float = field(default=float("nan"))


def _ground_state(diag, off, mass, tol=EIG_TOL, maxiter=EIG_MAXITER):
    """Lowest eigenpair of K f = mu M f with K tridiagonal, M diagonal.

    The generalized problem is symmetrized as M^{-1/2} K M^{-1/2}.  A Sturm
    bisection gives the shift; inverse iteration then polishes the vector.
    The residual is reported relative to the operator scale max|S_jj|.
    """
    sq = np.sqrt(mass)
    d = diag / mass
    e = off / (sq[:-1] * sq[1:])
    scale = float(np.max(np.abs(d)) + 2.0 * np.max(np.abs(e)))
    mu0 = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0]
    shift = mu0 - 1e-9 * max(1.0, abs(mu0))
    dl, dd, du, du2, ipiv, info = dgttrf(e, d - shift, e)
    if info < 0:
        raise SolverError(f"tridiagonal factorization failed (info={info})")
    y = np.ones_like(d)
    y /= np.linalg.norm(y)
    trace = []
    for it in range(1, maxiter + 1):
        z, info = dgttrs(dl, dd, du, du2, ipiv, y)
        y = z / np.linalg.norm(z)
        sy = d * y
        sy[:-1] += e * y[1:]
        sy[1:] += e * y[:-1]
        mu = float(y @ sy)
        res = float(np.max(np.abs(sy - mu * y))) / scale
        trace.append(res)
        if res <= tol:
            break
    else:
        raise SolverError("inverse iteration did not converge", trace)
    if y.sum() < 0:
        y = -y
    return mu, y / sq, res, it


def mu_osc(spec: OscillatorSpec) -> SpectralResult:
    """Ground state of the oscillator with Dirichlet condition at T."""
    grid = make_grid(spec.truncation_T, spec.n_points)
    d, e = stiffness_bands(grid)
    v = potential(grid.t, spec.alpha, 0.0, 0.0)
    m = grid.mass
    # drop the Dirichlet node; its cell still contributes to the last diagonal entry
    diag = d[:-1] + m[:-1] * v[:-1]
    mu, phi, res, it = _ground_state(diag, e[:-1], m[:-1])
    phi = np.append(phi, 0.0)
    dmu = float(np.sum(m * 2.0 * (grid.t + spec.alpha) * phi**2))
    return SpectralResult(mu=mu, phi=phi, residual=res, t=grid.t, iterations=it, dmu_dalpha=dmu)


def mu_eps(spec: CurvedOperatorSpec) -> SpectralResult:
    """Ground state of the curved operator with Neumann conditions at both ends."""
    grid = make_grid(spec.length, spec.n_points, spec.k, spec.eps)
    d, e = stiffness_bands(grid)
    v = potential(grid.t, spec.alpha, spec.k, spec.eps)
    m = grid.mass
    mu, phi, res, it = _ground_state(d + m * v, e, m)
    b_mom = momentum_density(grid.t, spec.alpha, spec.k, spec.eps)
    dmu = float(np.sum(grid.c * grid.h * 2.0 * b_mom * phi**2))
    return SpectralResult(mu=mu, phi=phi, residual=res, t=grid.t, iterations=it, dmu_dalpha=dmu)


def curvature_shift(spec: CurvedOperatorSpec) -> tuple[float, float]:
    """mu_eps - mu_osc on the same interval, and the constant C in C eps |log eps|^3."""
    curved = mu_eps(spec).mu
    flat = mu_osc(OscillatorSpec(spec.alpha, spec.length, spec.n_points)).mu
    diff = curved - flat
    scale = spec.eps * abs(math.log(spec.eps)) ** 3 if spec.eps > 0 else float("nan")
    return diff, abs(diff) / scale


@dataclass(frozen=True)
class Theta0Config:
    n_points: int = 8193
    truncation_T: float = HALF_LINE_T
    bracket: tuple[float, float] = (-1.2, -0.4)
    scan: tuple[float, float, int] = (-2.5, 0.5, 31)


def find_theta0(config: Theta0Config | None = None) -> tuple[float, float]:
    """Minimum of mu_osc over alpha and its location.

    The discrete derivative d mu / d alpha is exact (Hellmann-Feynman for the
    symmetric matrix), so the minimum is located by a root find on it.
    """
    cfg = config or Theta0Config()

    def res(a):
        return mu_osc(OscillatorSpec(a, cfg.truncation_T, cfg.n_points))

    lo, hi, num = cfg.scan
    alphas = np.linspace(lo, hi, num)
    coarse = [mu_osc(OscillatorSpec(a, cfg.truncation_T, 513)).mu for a in alphas]
    drops = np.sign(np.diff(coarse))
    turns = int(np.sum(drops[1:] != drops[:-1]))
    if turns != 1:
        raise SolverError("mu_osc is not unimodal on the scan interval",
                          list(zip(alphas.tolist(), coarse)))
    a0, a1 = cfg.bracket
    g0, g1 = res(a0).dmu_dalpha, res(a1).dmu_dalpha
    if not (g0 < 0 < g1):
        raise SolverError("derivative does not change sign on the bracket",
                          [(a0, g0), (a1, g1)])
    alpha0 = brentq(lambda a: res(a).dmu_dalpha, a0, a1, xtol=1e-14, rtol=1e-14)
    return res(alpha0).mu, alpha0


def _argmin_mu(k, eps, c0, n_points):
    def dmu(a):
        return mu_eps(CurvedOperatorSpec(k, a, eps, c0, n_points)).dmu_dalpha

    lo, hi = -1.6, -0.1
    if not (dmu(lo) < 0 < dmu(hi)):
        raise SolverError("could not bracket the minimum of mu_eps over alpha")
    return brentq(dmu, lo, hi, xtol=1e-12)


def alpha_window(b: float, k: float, eps: float, c0: float = 4.0,
                 n_points: int = 2048, scan_step: float = 0.05, open_left: bool = False,
                 open_span: float = 3.0):
    """Interval of alpha on which 1/b > mu_eps(k, alpha).

    Returns ``None`` when the window is empty (trivial regime).  Bisection
    starts from the minimum of mu_eps and moves outward; a dense scan guards
    against more than two crossings.  With ``open_left`` (b <= 1, where
    mu_eps stays below 1/b as alpha -> -inf) the left end is cut at
    ``open_span`` below the minimizer.
    """
    target = 1.0 / b

    def gap(a):
        return mu_eps(CurvedOperatorSpec(k, a, eps, c0, n_points)).mu - target

    a_star = _argmin_mu(k, eps, c0, n_points)
    if gap(a_star) >= 0.0:
        return None
    length = interval_length(eps, c0)
    left_limit = -0.5 * length
    step = 0.25
    if open_left:
        lo = max(left_limit, a_star - open_span)
    else:
        a = a_star
        while gap(a) < 0.0:
            a -= step
            if a < left_limit:
                raise SolverError("left end of the alpha window not found")
        lo = brentq(gap, a, min(a + step, a_star), xtol=1e-13)
    a = a_star
    while gap(a) < 0.0:
        a += step
        if a > 2.0:
            raise SolverError("right end of the alpha window not found")
    hi = brentq(gap, max(a - step, a_star), a, xtol=1e-13)

    grid = np.arange(max(left_limit, lo - 1.0), min(2.0, hi + 1.0), scan_step)
    signs = np.sign([gap(x) for x in grid])
    crossings = int(np.sum(signs[1:] != signs[:-1]))
    if crossings > 2:
        raise SolverError("more than two crossings of 1/b = mu_eps detected",
                          list(zip(grid.tolist(), signs.tolist())))
    return lo, hi
