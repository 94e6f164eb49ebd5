"""Minimizers of the effective 1D boundary-layer functional.

For curvature k, phase alpha and field ratio b the functional is

    E[f] = int_0^{t_eps} (1 - eps k t) { f'^2 + V_{k,alpha} f^2 - (2 f^2 - f^4) / (2b) } dt.

It is sampled once with the shared quadrature of ``discrete``; Newton's
method is applied to the exact gradient of the sampled functional, so the
energy identity and the alpha-derivative formula hold to round-off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs, dpttrf
from scipy.optimize import brentq

from . import spectral
from .discrete import (
    RegimeError,
    SolverError,
    WeightedGrid,
    apply_stiffness,
    interval_length,
    kinetic,
    make_grid,
    momentum_density,
    potential,
    stiffness_bands,
)

log = logging.getLogger(__name__)

THETA0 = 0.5901061249  # de Gennes constant; recomputed by spectral.find_theta0
GRAD_TOL = 1e-10


class TrivialRegime(RegimeError):
    """The alpha window is empty: the minimizer is f = 0 for every alpha."""


def eps_from_kappa(b: float, kappa: float) -> float:
    """Small parameter eps = 1 / (sqrt(b) kappa) from the GL parameter kappa."""
    return 1.0 / (math.sqrt(b) * kappa)


@dataclass(frozen=True)
class ProfileParams:
    k: float
    alpha: float
    eps: float
    b: float
    c0: float = 4.0
    n_points: int = 2048

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("curvature must be non-negative")
        if self.eps < 0 or (self.eps == 0 and self.k != 0):
            raise ValueError("eps = 0 is only allowed with k = 0")
        if self.b <= 0:
            raise RegimeError("b must be positive")
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16")

    @property
    def length(self) -> float:
        return interval_length(self.eps, self.c0)

    def grid(self) -> WeightedGrid:
        return make_grid(self.length, self.n_points, self.k, self.eps)


@dataclass
class Profile1D:
    params: ProfileParams
    t: np.ndarray
    f: np.ndarray
    energy: float
    grad_norm: float
    iterations: int = 0

    @property
    def trivial(self) -> bool:
        return not np.any(self.f > 0)

    def grid(self) -> WeightedGrid:
        return self.params.grid()

    def potential(self) -> np.ndarray:
        p = self.params
        return potential(self.t, p.alpha, p.k, p.eps)


@dataclass
class OptimalProfile:
    alpha_k: float
    profile: Profile1D
    fh_residual: float
    local_minima: list = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.profile.energy


def check_regime(b: float, *, closed_left: bool = False) -> None:
    """Reject b outside (1, 1/Theta0); b = 1 is accepted when closed_left."""
    low_ok = b >= 1.0 if closed_left else b > 1.0
    if not low_ok:
        raise RegimeError(f"b = {b} is below the surface superconductivity regime")
    if b >= 1.0 / THETA0:
        raise TrivialRegime(f"b = {b} >= 1/Theta0: only the trivial profile exists")


# ----------------------------------------------------------------------------
# discrete functional


def _terms(grid, v, b):
    m = grid.mass
    return m, m * (v - 1.0 / b)


def energy_of(grid: WeightedGrid, f: np.ndarray, v: np.ndarray, b: float) -> float:
    m, mq = _terms(grid, v, b)
    return kinetic(grid, f) + float(np.sum(mq * f * f) + np.sum(m * f**4) / (2.0 * b))


def gradient_of(grid, f, v, b):
    m, mq = _terms(grid, v, b)
    return 2.0 * (apply_stiffness(grid, f) + mq * f + m * f**3 / b)


def el_residual(grid, f, v, b):
    """Gradient divided by 2 m_j: the sampled Euler-Lagrange expression."""
    return gradient_of(grid, f, v, b) / (2.0 * grid.mass)


def _newton_direction(grid, f, v, b, g, d_kin, e_kin):
    m, mq = _terms(grid, v, b)
    diag = 2.0 * (d_kin + mq + 3.0 * m * f * f / b)
    off = 2.0 * e_kin
    lam = 0.0
    for _ in range(40):
        dd = diag + lam * 2.0 * m
        _, _, info = dpttrf(dd, off)
        if info == 0:
            dl, d2, du, du2, ipiv, info = dgttrf(off, dd, off)
            step, info = dgttrs(dl, d2, du, du2, ipiv, g)
            return step
        lam = max(10.0 * lam, 1e-3 * float(np.max(np.abs(mq / m))) + 1e-3)
    raise SolverError("could not regularize the Newton system")


def _bb_flow(grid, f, v, b, steps=60):
    """Projected gradient flow with Barzilai-Borwein steps in the mass metric."""
    m = grid.mass
    g = el_residual(grid, f, v, b)
    tau = 0.1 * grid.h**2
    for _ in range(steps):
        f_new = np.maximum(f - tau * g, 0.0)
        g_new = el_residual(grid, f_new, v, b)
        s, y = f_new - f, g_new - g
        sy = float(np.sum(m * s * y))
        if sy > 0:
            tau = float(np.sum(m * s * s)) / sy
        f, g = f_new, g_new
    return f


def minimize_profile(params: ProfileParams, init: np.ndarray | None = None,
                     tol: float = GRAD_TOL, maxiter: int = 200) -> Profile1D:
    """Non-negative minimizer of the sampled 1D functional at fixed alpha."""
    grid = params.grid()
    v = potential(grid.t, params.alpha, params.k, params.eps)
    b = params.b
    lowest = spectral.mu_eps(spectral.CurvedOperatorSpec(
        params.k, params.alpha, params.eps, params.c0, params.n_points)).mu
    if 1.0 / b <= lowest:
        zero = np.zeros(grid.n)
        return Profile1D(params, grid.t, zero, 0.0, 0.0, 0)

    f = np.full(grid.n, 0.5) if init is None else np.maximum(np.array(init, float), 0.0)
    if not np.any(f > 0):
        f = np.full(grid.n, 0.5)
    d_kin, e_kin = stiffness_bands(grid)
    e_cur = energy_of(grid, f, v, b)
    # the residual cannot drop below round-off in the stiffness rows, which
    # grows like 1/h^2; tolerances under that floor are raised to it
    scale = float(np.max((d_kin + grid.mass * np.abs(v)) / grid.mass))
    trace = []
    for it in range(1, maxiter + 1):
        g = gradient_of(grid, f, v, b)
        res = float(np.max(np.abs(g / (2.0 * grid.mass))))
        trace.append((e_cur, res))
        if res <= max(tol, 4.0 * np.finfo(float).eps * scale * float(np.max(f))):
            break
        step = _newton_direction(grid, f, v, b, g, d_kin, e_kin)
        s = 1.0
        accepted = False
        for _ in range(40):
            trial = np.maximum(f - s * step, 0.0)
            e_trial = energy_of(grid, trial, v, b)
            if e_trial <= e_cur + 1e-14 * max(1.0, abs(e_cur)):
                accepted = True
                break
            s *= 0.5
        if not accepted or not np.any(trial > 0):
            f = _bb_flow(grid, f if np.any(f > 0) else np.full(grid.n, 0.5), v, b)
            e_cur = energy_of(grid, f, v, b)
            continue
        f, e_cur = trial, e_trial
    else:
        raise SolverError(f"profile solver stalled at residual {res:.3e}", trace)
    if np.min(f) < -1e-12:
        raise SolverError("negative profile entries: projection failure")
    return Profile1D(params, grid.t, f, e_cur, res, it)


# ----------------------------------------------------------------------------
# diagnostics


def fh_derivative(profile: Profile1D) -> float:
    """d E / d alpha = 2 int (t + alpha - eps k t^2/2)/(1 - eps k t) f^2 dt."""
    p = profile.params
    grid = profile.grid()
    dens = momentum_density(grid.t, p.alpha, p.k, p.eps)
    return float(np.sum(grid.c * grid.h * 2.0 * dens * profile.f**2))


def energy_identity(profile: Profile1D) -> tuple[float, float]:
    """(functional value, -(1/2b) int (1 - eps k t) f^4) with the same quadrature."""
    grid = profile.grid()
    lhs = energy_of(grid, profile.f, profile.potential(), profile.params.b)
    rhs = -grid.integrate(profile.f**4) / (2.0 * profile.params.b)
    return lhs, rhs


def ode_residual(profile: Profile1D, stencil: str = "discrete") -> float:
    """Max-norm residual of -f'' + (eps k / w) f' + V f - (1 - f^2) f / b.

    ``discrete`` uses the minimizer's own operators (ghost-point Neumann rows
    included); ``fourth`` applies fourth-order central stencils on interior
    nodes and therefore measures the O(h^2) truncation error of the profile.
    """
    if profile.trivial:
        return 0.0
    p = profile.params
    f, t = profile.f, profile.t
    grid = profile.grid()
    if stencil == "discrete":
        return float(np.max(np.abs(el_residual(grid, f, profile.potential(), p.b))))
    if stencil != "fourth":
        raise ValueError(f"unknown stencil {stencil!r}")
    h = grid.h
    d2 = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)
    d1 = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    tc, fc = t[2:-2], f[2:-2]
    w = 1.0 - p.eps * p.k * tc
    v = potential(tc, p.alpha, p.k, p.eps)
    r = -d2 + (p.eps * p.k / w) * d1 + v * fc - (1.0 - fc * fc) * fc / p.b
    return float(np.max(np.abs(r)))


def derivative(profile: Profile1D) -> np.ndarray:
    """Central-difference f' with the Neumann values at both ends."""
    f, h = profile.f, profile.grid().h
    df = np.zeros_like(f)
    df[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    return df


def pointwise_bounds_check(profile: Profile1D, cap: float = 1e6) -> dict:
    """Fitted constants of c exp(-(t + sqrt 2)^2 / 2) <= f <= C exp(-(t + alpha)^2 / 2)."""
    if profile.trivial:
        raise ValueError("pointwise bounds need a non-trivial profile")
    t, f = profile.t, profile.f
    alpha = profile.params.alpha
    log_f = np.log(np.maximum(f, np.finfo(float).tiny))
    upper = float(np.exp(np.max(log_f + 0.5 * (t + alpha) ** 2)))
    lower = float(np.exp(np.min(log_f + 0.5 * (t + math.sqrt(2.0)) ** 2)))
    ok = bool(lower > 0 and np.isfinite(upper) and upper / lower < cap)
    return {"C_upper": upper, "c_lower": lower, "ratio": upper / lower, "ok": ok}


def gradient_bound_check(profile: Profile1D) -> dict:
    """Fitted gradient constants near the boundary and in the tail, plus monotonicity."""
    p = profile.params
    if profile.trivial or p.eps <= 0:
        raise ValueError("gradient bounds need a non-trivial profile with eps > 0")
    t, f = profile.t, profile.f
    df = derivative(profile)
    split = abs(p.alpha) + 2.0 / math.sqrt(p.b)
    near = t <= split
    tail = (t >= split) & (f > 0)
    logeps3 = abs(math.log(p.eps)) ** 3
    c_near = float(np.max(np.abs(df[near])))
    c_tail = float(np.max(np.abs(df[tail]) / f[tail])) / logeps3 if np.any(tail) else 0.0
    mono_start = -p.alpha + 1.0 / math.sqrt(p.b)
    sel = t >= mono_start
    rises = np.diff(f[sel])
    monotone = bool(np.all(rises <= 1e-12))
    return {
        "C_near": c_near,
        "C_tail": c_tail,
        "monotone_from": mono_start,
        "max_rise": float(np.max(rises)) if rises.size else 0.0,
        "monotone": monotone,
    }


# ----------------------------------------------------------------------------
# optimal phase


def _golden(fun, lo, hi, tol):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b_ = lo, hi
    c = b_ - inv * (b_ - a)
    d = a + inv * (b_ - a)
    fc, fd = fun(c), fun(d)
    while b_ - a > tol:
        if fc < fd:
            b_, d, fd = d, c, fc
            c = b_ - inv * (b_ - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b_ - a)
            fd = fun(d)
    return 0.5 * (a + b_)


class _AlphaFamily:
    """Profiles at varying alpha with warm starts from the closest solved alpha."""

    def __init__(self, k, eps, b, c0, n_points):
        self.base = ProfileParams(k, 0.0, eps, b, c0, n_points)
        self.cache: dict[float, Profile1D] = {}

    def solve(self, alpha: float) -> Profile1D:
        if alpha in self.cache:
            return self.cache[alpha]
        init = None
        nontrivial = [a for a, pr in self.cache.items() if not pr.trivial]
        if nontrivial:
            init = self.cache[min(nontrivial, key=lambda a: abs(a - alpha))].f
        prof = minimize_profile(replace(self.base, alpha=alpha), init=init)
        self.cache[alpha] = prof
        return prof


def optimize_alpha(k: float, eps: float, b: float, c0: float = 4.0, n_points: int = 2048,
                   window: tuple[float, float] | None = None, scan_points: int = 41,
                   tol: float = 1e-8) -> OptimalProfile:
    """Minimize E^1D_{k,alpha} over the non-trivial alpha window.

    A coarse scan locates all local minima; golden section refines the best
    one and a root find on the alpha-derivative formula finishes it.
    ``window`` overrides the spectral window and skips the regime check.
    For b = 1 the window is unbounded on the left and is cut at a fixed
    distance below the minimizer of mu_eps; b < 1 needs an explicit window.
    """
    if window is None:
        check_regime(b, closed_left=True)
        window = spectral.alpha_window(b, k, eps, c0, n_points, open_left=b <= 1.0)
        if window is None:
            raise TrivialRegime("empty alpha window")
    lo, hi = window
    fam = _AlphaFamily(k, eps, b, c0, n_points)
    alphas = np.linspace(lo, hi, scan_points)[1:-1]
    # march from the centre outward so warm starts stay on the non-trivial branch
    order = np.argsort(np.abs(alphas - alphas[len(alphas) // 2]))
    for a in alphas[order]:
        fam.solve(float(a))
    energies = np.array([fam.solve(float(a)).energy for a in alphas])
    minima = [i for i in range(len(alphas))
              if (i == 0 or energies[i] <= energies[i - 1])
              and (i == len(alphas) - 1 or energies[i] <= energies[i + 1])]
    local = [(float(alphas[i]), float(energies[i])) for i in minima]
    if len(local) > 1:
        log.info("several local minima in the alpha scan: %s", local)
    best = int(np.argmin(energies))
    a_lo = float(alphas[max(best - 1, 0)])
    a_hi = float(alphas[min(best + 1, len(alphas) - 1)])
    a_gs = _golden(lambda a: fam.solve(a).energy, a_lo, a_hi, 1e-4)

    def dE(a):
        return fh_derivative(fam.solve(a))

    step = 1e-4
    left, right = a_gs - step, a_gs + step
    for _ in range(60):
        if dE(left) < 0 < dE(right):
            break
        left, right = left - step, right + step
        step *= 2
    else:
        raise SolverError("could not bracket the alpha-derivative root")
    alpha_k = brentq(dE, left, right, xtol=min(tol, 1e-12), rtol=4 * np.finfo(float).eps)
    prof = fam.solve(alpha_k)
    return OptimalProfile(alpha_k=alpha_k, profile=prof, fh_residual=fh_derivative(prof),
                          local_minima=local)


def profile_at(opt: OptimalProfile, alpha: float) -> Profile1D:
    """Re-solve the profile of an optimal family at another alpha (warm start)."""
    return minimize_profile(replace(opt.profile.params, alpha=alpha), init=opt.profile.f)
