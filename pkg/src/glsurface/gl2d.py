"""Ginzburg-Landau minimization on a disc of radius R.

Polar grid with rings indexed from the boundary inwards.  The first
``n_layer`` rings sit at r = R - eps t on the nodes of the 1D profile grid,
so a radial profile of the 2D problem is literally a 1D profile; below the
layer a geometric grid runs down to a Dirichlet ring r_in where psi = 0.

The vector potential is carried by link phases (integral of A.dl / eps^2):
``radial[i, j]`` from ring i to ring i+1 at angle theta_j, ``angular[i, j]``
along ring i from theta_j to theta_{j+1}.  Radial kinetic terms use
|exp(i phi) psi_{i+1} - psi_i|^2; along a ring psi is parallel-transported
to a periodic function and differentiated spectrally.  The energy is
gauge invariant at round-off.

Energy (theta-sum over j, radial cells c, ring nodes i):

    dtheta sum_j [ sum_c r_c/dr_c |exp(i phi) psi_{c+1} - psi_c|^2
                   + sum_i w_i r_i (|D_theta psi|^2 - (2|psi|^2 - |psi|^4) / (2 b eps^2)) ]
    + (b / eps^4) sum_plaquettes area (curl - 1)^2      (coupled mode only)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .discrete import SolverError
from .layer import LayerField, ShapeError
from .profile1d import OptimalProfile, check_regime, optimize_alpha

log = logging.getLogger(__name__)

LAYER_STEP = 0.05          # radial spacing in the layer, in units of eps
THETA_ARC = 0.3            # target arc length per theta node, in units of eps
GRAD_TOL = 1e-8
RESTART = 50


class DependencyError(RuntimeError):
    pass


class DegreeUndefined(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def effective_c0(eps: float, R: float, c0: float = 4.0, max_drop: float = 0.75) -> float:
    """Largest c <= c0 keeping eps k t_eps <= max_drop (k = 1/R)."""
    return min(c0, max_drop * R / (eps * abs(math.log(eps))))


def _pow2_at_least(n: int) -> int:
    return 1 << max(3, int(math.ceil(math.log2(max(n, 8)))))


def default_n_theta(R: float, eps: float, alpha_guess: float = -0.77) -> int:
    n_est = R * R / (2 * eps * eps) - R * abs(alpha_guess) / eps
    return _pow2_at_least(int(max(2 * abs(n_est) + 64, 2 * math.pi * R / (THETA_ARC * eps))))


@dataclass(frozen=True)
class DiscGrid:
    R: float
    eps: float
    c0: float
    r: np.ndarray
    n_layer: int
    n_theta: int

    def __post_init__(self):
        if np.any(np.diff(self.r) >= 0):
            raise ValueError("ring radii must decrease")
        near = int(np.sum(self.r >= self.R - 3 * self.eps))
        if near < 24:
            raise ValueError(f"only {near} rings within 3 eps of the boundary (need 24)")
        if self.n_theta < 8:
            raise ValueError("n_theta must be at least 8")

    @property
    def k(self) -> float:
        return 1.0 / self.R

    @property
    def n_r(self) -> int:
        return self.r.size

    @property
    def dtheta(self) -> float:
        return 2 * math.pi / self.n_theta

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    @property
    def t(self) -> np.ndarray:
        return (self.R - self.r) / self.eps

    @property
    def t_max(self) -> float:
        return float(self.t[self.n_layer - 1])

    @property
    def dr(self) -> np.ndarray:
        return self.r[:-1] - self.r[1:]

    @property
    def r_mid(self) -> np.ndarray:
        return 0.5 * (self.r[:-1] + self.r[1:])

    @property
    def node_width(self) -> np.ndarray:
        """Trapezoid widths; the Dirichlet ring gets its half cell too."""
        dr = self.dr
        w = np.zeros(self.n_r)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
        return w

    @property
    def ring_weight(self) -> np.ndarray:
        """Area element w_i r_i dtheta of each node."""
        return self.node_width * self.r * self.dtheta

    def plaquette_area(self) -> np.ndarray:
        return 0.5 * (self.r[:-1] ** 2 - self.r[1:] ** 2) * self.dtheta


def make_disc_grid(R: float, eps: float, c0: float = 4.0, n_layer: int | None = None,
                   n_theta: int | None = None, growth: float = 1.2) -> DiscGrid:
    """Layer rings on a uniform t-grid, then geometric rings down to r_in."""
    if not 0 < eps < 1 or R <= 0:
        raise ValueError("need 0 < eps < 1 and R > 0")
    c0 = effective_c0(eps, R, c0)
    t_eps = c0 * abs(math.log(eps))
    if n_layer is None:
        # whole number of steps, so t = 1/2 (the inner winding contour) is a ring
        steps = int(math.floor(t_eps / LAYER_STEP + 1e-9))
        t_eps = steps * LAYER_STEP
        c0 = t_eps / abs(math.log(eps))
        n_layer = steps + 1
    t = np.linspace(0.0, t_eps, n_layer)
    r = list(R - eps * t)
    r_in = max(0.05 * R, R - eps * (t_eps + 6.0))
    step = eps * (t[1] - t[0])
    while r[-1] - growth * step > r_in + 0.5 * growth * step:
        step *= growth
        r.append(r[-1] - step)
    r.append(r_in)
    return DiscGrid(R, eps, c0, np.array(r), n_layer, n_theta or default_n_theta(R, eps))


@dataclass
class Links:
    radial: np.ndarray
    angular: np.ndarray

    def copy(self) -> "Links":
        return Links(self.radial.copy(), self.angular.copy())


def symmetric_links(grid: DiscGrid) -> Links:
    """A = (r/2) e_theta: no radial phase, r^2/(2 eps^2) dtheta along rings."""
    flux = grid.r**2 / (2 * grid.eps**2)
    return Links(np.zeros((grid.n_r - 1, grid.n_theta)),
                 np.repeat((flux * grid.dtheta)[:, None], grid.n_theta, axis=1))


def boundary_gauge_links(grid: DiscGrid) -> Links:
    """A = -(R^2 - r^2)/(2r) e_theta: zero circulation on the boundary."""
    flux = -(grid.R**2 - grid.r**2) / (2 * grid.eps**2)
    return Links(np.zeros((grid.n_r - 1, grid.n_theta)),
                 np.repeat((flux * grid.dtheta)[:, None], grid.n_theta, axis=1))


# ----------------------------------------------------------------------------
# discrete operator


class _Operator:
    """Kinetic operator for fixed links, its preconditioner and helpers."""

    def __init__(self, grid: DiscGrid, links: Links, centres=None, shift: float | None = None,
                 b: float = 1.5):
        self.grid = grid
        n = grid.n_theta
        self.kappa = grid.dtheta * grid.r_mid / grid.dr
        self.W = grid.ring_weight
        total = links.angular.sum(axis=1)
        self.hbar = total / (2 * math.pi)
        cum = np.cumsum(links.angular, axis=1) - links.angular
        self.tau = cum - np.arange(n)[None, :] * (total[:, None] / n)
        self.transport = bool(np.max(np.abs(self.tau)) > 0.0)
        self.phase = np.exp(1j * self.tau) if self.transport else None
        self.centres = np.round(-self.hbar).astype(int) if centres is None else np.asarray(centres)
        lo = self.centres[:, None] - n // 2
        m = lo + np.mod(np.arange(n)[None, :] - lo, n)
        self.mplus = m + self.hbar[:, None]
        self.lam2 = (self.mplus / grid.r[:, None]) ** 2
        self.rad = np.exp(1j * links.radial) if np.any(links.radial) else None
        self._factor(b if shift is None else shift)

    def to_frame(self, psi):
        return psi * self.phase[:psi.shape[0]] if self.transport else psi

    def from_frame(self, psi):
        return psi * np.conj(self.phase[:psi.shape[0]]) if self.transport else psi

    def theta_op(self, psi, weights):
        x = np.fft.ifft(weights * np.fft.fft(self.to_frame(psi), axis=1), axis=1)
        return self.from_frame(x)

    def kin(self, psi):
        """d E_kin / d conj(psi) (the energy is <psi, K psi>)."""
        out = self.W[:, None] * self.theta_op(psi, self.lam2)
        k = self.kappa[:, None]
        nxt = psi[1:] * self.rad if self.rad is not None else psi[1:]
        diff = nxt - psi[:-1]
        out[:-1] -= k * diff
        back = diff * np.conj(self.rad) if self.rad is not None else diff
        out[1:] += k * back
        return out

    def _factor(self, shift):
        """Per-mode tridiagonal LU of K + shift W / eps^2 on the free rings."""
        g = self.grid
        nf = g.n_r - 1
        kap = self.kappa
        diag = (self.W[:nf, None] * (self.lam2[:nf] + shift / g.eps**2))
        diag = diag + kap[:nf, None]
        diag[1:] += kap[:nf - 1, None]
        off = -kap[:nf - 1]
        piv = np.empty_like(diag)
        piv[0] = diag[0]
        for i in range(1, nf):
            piv[i] = diag[i] - off[i - 1] ** 2 / piv[i - 1]
        if np.any(piv <= 0):
            raise SolverError("preconditioner is not positive definite")
        self._piv, self._off = piv, off

    def precondition(self, g):
        nf = self.grid.n_r - 1
        rhs = np.fft.fft(self.to_frame(g[:nf]), axis=1)
        piv, off = self._piv, self._off
        y = np.empty_like(rhs)
        y[0] = rhs[0]
        for i in range(1, nf):
            y[i] = rhs[i] - off[i - 1] / piv[i - 1] * y[i - 1]
        x = np.empty_like(rhs)
        x[-1] = y[-1] / piv[-1]
        for i in range(nf - 2, -1, -1):
            x[i] = (y[i] - off[i] * x[i + 1]) / piv[i]
        out = np.zeros_like(g)
        out[:nf] = self.from_frame(np.fft.ifft(x, axis=1))
        return out


def _re_dot(a, b) -> float:
    return float(np.sum(a.real * b.real + a.imag * b.imag))


def field_energy(grid: DiscGrid, links: Links, b: float, include_cap: bool = True) -> float:
    """(b / eps^4) sum area (curl - 1)^2 over plaquettes and the inner cap."""
    curl, area = plaquette_curl(grid, links)
    e = float(np.sum(area * (curl - 1.0) ** 2))
    if include_cap:
        cap_area = math.pi * grid.r[-1] ** 2
        cap_curl = grid.eps**2 * links.angular[-1].sum() / cap_area
        e += cap_area * (cap_curl - 1.0) ** 2
    return b / grid.eps**4 * e


def plaquette_curl(grid: DiscGrid, links: Links):
    area = grid.plaquette_area()[:, None]
    rad, ang = links.radial, links.angular
    circ = ang[:-1] + np.roll(rad, -1, axis=1) - ang[1:] - rad
    return grid.eps**2 * circ / area, area


def _energy_parts(op: _Operator, psi, b, eps):
    kpsi = op.kin(psi)
    rho = np.abs(psi) ** 2
    W = op.W[:, None]
    kin = _re_dot(psi, kpsi)
    pot = float(np.sum(W * (-2.0 * rho + rho * rho))) / (2 * b * eps**2)
    return kin, pot, kpsi


def _gradient(op, psi, kpsi, b, eps):
    W = op.W[:, None]
    g = 2.0 * (kpsi - W * (1.0 - np.abs(psi) ** 2) * psi / (b * eps**2))
    g[-1] = 0.0
    return g


def _residual(op, g, eps):
    nf = op.grid.n_r - 1
    return float(np.max(np.abs(g[:nf]) * eps**2 / (2.0 * op.W[:nf, None])))


# ----------------------------------------------------------------------------
# fields


@dataclass
class DiscField:
    grid: DiscGrid
    psi: np.ndarray
    links: Links
    eps: float
    b: float
    energy: float = float("nan")
    mode: str = "fixed_A"
    gauge: str = "symmetric"
    opt: OptimalProfile | None = None
    grad_norm: float = float("nan")
    iterations: int = 0
    trace: list = field(default_factory=list)

    @property
    def A_theta(self) -> np.ndarray:
        """Ring-averaged angular component of A recovered from the links."""
        g = self.grid
        return self.eps**2 * self.links.angular.mean(axis=1) / (g.r * g.dtheta)

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.psi)))


def gl_energy(grid: DiscGrid, psi, links: Links, b: float, coupled: bool = False,
              include_cap: bool = True, centres=None) -> float:
    op = _Operator(grid, links, centres, b=b)
    kin, pot, _ = _energy_parts(op, psi, b, grid.eps)
    e = kin + pot
    if coupled:
        e += field_energy(grid, links, b, include_cap)
    return e


def gl_gradient(grid: DiscGrid, psi, links: Links, b: float, centres=None):
    """Gradient dE/dRe + i dE/dIm of the order-parameter part (Dirichlet ring zeroed)."""
    op = _Operator(grid, links, centres, b=b)
    _, _, kpsi = _energy_parts(op, psi, b, grid.eps)
    return _gradient(op, psi, kpsi, b, grid.eps)


def profile_for_grid(grid: DiscGrid, b: float) -> OptimalProfile:
    return optimize_alpha(grid.k, grid.eps, b, c0=grid.c0, n_points=grid.n_layer)


def _radial_profile(grid: DiscGrid, opt: OptimalProfile) -> np.ndarray:
    """f_k on layer rings, exp-cutoff tail below, zero at and inside R/2."""
    f = opt.profile.f
    if f.size != grid.n_layer:
        raise ShapeError("profile and grid layer sizes differ")
    rho = np.zeros(grid.n_r)
    rho[:grid.n_layer] = f
    r_cut = grid.r[grid.n_layer - 1]
    inner = grid.r[grid.n_layer:]
    rho[grid.n_layer:] = f[-1] * np.exp(-((r_cut - inner) / grid.eps) ** 2)
    rho[grid.r <= 0.5 * grid.R] = 0.0
    rho[-1] = 0.0
    return rho


def trial_winding(grid: DiscGrid, alpha_k: float, b: float, opt: OptimalProfile) -> int:
    """Symmetric-gauge integer winding whose effective phase is closest in energy to alpha_k."""
    R, eps = grid.R, grid.eps
    x = -R * R / (2 * eps * eps) - R * alpha_k / eps
    best, best_e = None, None
    rho = _radial_profile(grid, opt)
    links = symmetric_links(grid)
    for n in (math.floor(x), math.ceil(x)):
        psi = rho[:, None] * np.exp(1j * n * grid.theta)[None, :]
        e = gl_energy(grid, psi, links, b)
        if best_e is None or e < best_e:
            best, best_e = n, e
    return int(best)


def build_trial(eps: float, b: float, R: float = 1.0, grid: DiscGrid | None = None,
                opt: OptimalProfile | None = None, gauge: str = "symmetric") -> DiscField:
    """f_k((R - r)/eps) exp(i n theta) with the cutoff tail.

    ``gauge='symmetric'`` uses A = (r/2) e_theta and the integer n closest
    in energy to the optimal phase; ``gauge='boundary'`` uses the trial
    potential -(R^2 - r^2)/(2r) e_theta with n = -floor(alpha_k / eps).
    """
    grid = grid or make_disc_grid(R, eps)
    if opt is None:
        raise DependencyError("build_trial needs the optimal 1D profile for (1/R, eps, b)")
    p = opt.profile.params
    if not (math.isclose(p.k, grid.k) and math.isclose(p.eps, eps) and math.isclose(p.b, b)):
        raise DependencyError("profile parameters do not match the disc")
    rho = _radial_profile(grid, opt)
    if gauge == "symmetric":
        links = symmetric_links(grid)
        n = trial_winding(grid, opt.alpha_k, b, opt)
    elif gauge == "boundary":
        links = boundary_gauge_links(grid)
        n = -math.floor(opt.alpha_k / eps)
    else:
        raise ValueError("gauge must be 'symmetric' or 'boundary'")
    psi = rho[:, None] * np.exp(1j * n * grid.theta)[None, :]
    e = gl_energy(grid, psi, links, b)
    return DiscField(grid, psi, links, eps, b, e, "fixed_A", gauge, opt)


# ----------------------------------------------------------------------------
# minimization


def _quartic_step(op, psi, kpsi, d, b, eps):
    """Exact minimizer along d of the (quartic) energy."""
    W = op.W[:, None]
    kd = op.kin(d)
    w2 = W / (b * eps**2)
    q = W / (2 * b * eps**2)
    A = np.abs(psi) ** 2
    B = psi.real * d.real + psi.imag * d.imag
    C = np.abs(d) ** 2
    e1 = 2 * _re_dot(d, kpsi - w2 * psi) + float(np.sum(q * 4 * A * B))
    e2 = _re_dot(d, kd) - float(np.sum(w2 * C)) + float(np.sum(q * (4 * B * B + 2 * A * C)))
    e3 = float(np.sum(q * 4 * B * C))
    e4 = float(np.sum(q * C * C))
    roots = np.roots([4 * e4, 3 * e3, 2 * e2, e1])
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real

    def poly(x):
        return e1 * x + e2 * x * x + e3 * x**3 + e4 * x**4

    cands = [x for x in real if x > 0]
    if not cands:
        return 0.0, e1
    tau = min(cands, key=poly)
    return float(tau), e1


def _seed_perturbation(grid, seed, amplitude):
    rng = np.random.default_rng(seed)
    t = grid.t
    out = np.zeros((grid.n_r, grid.n_theta), complex)
    for m in range(-3, 4):
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        radial = c[0] + c[1] * np.cos(t / 2.0) + c[2] * np.exp(-t)
        out += radial[:, None] * np.exp(1j * m * grid.theta)[None, :]
    return amplitude * out / np.max(np.abs(out))


def _descend_psi(op, psi, b, eps, tol, maxiter, trace):
    kin, pot, kpsi = _energy_parts(op, psi, b, eps)
    energy = kin + pot
    g = _gradient(op, psi, kpsi, b, eps)
    z = op.precondition(g)
    d = -z
    gz = _re_dot(g, z)
    res = _residual(op, g, eps)
    it = 0
    for it in range(1, maxiter + 1):
        trace.append((energy, res))
        if res <= tol:
            return psi, energy, res, it, True
        tau, slope = _quartic_step(op, psi, kpsi, d, b, eps)
        if slope >= 0 or tau <= 0:
            d = -z
            tau, slope = _quartic_step(op, psi, kpsi, d, b, eps)
        accepted = False
        for _ in range(30):
            trial = psi + tau * d
            k2, p2, kpsi2 = _energy_parts(op, trial, b, eps)
            e_new = k2 + p2
            if e_new <= energy + 1e-4 * tau * slope + 1e-13 * abs(energy):
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            raise SolverError("line search failed to decrease the energy", trace)
        psi, energy, kpsi = trial, e_new, kpsi2
        g_new = _gradient(op, psi, kpsi, b, eps)
        z_new = op.precondition(g_new)
        gz_new = _re_dot(g_new, z_new)
        beta = max(0.0, (gz_new - _re_dot(g_new, z)) / gz) if gz > 0 else 0.0
        if it % RESTART == 0:
            beta = 0.0
        d = -z_new + beta * d
        if _re_dot(g_new, d) >= 0:
            d = -z_new
        g, z, gz = g_new, z_new, gz_new
        res = _residual(op, g, eps)
    trace.append((energy, res))
    return psi, energy, res, it, res <= tol


# link descent (coupled mode)

def _link_gradient(grid, psi, links, b, centres):
    op = _Operator(grid, links, centres, b=b)
    eps = grid.eps
    n = grid.n_theta
    # radial links
    nxt = psi[1:] * np.exp(1j * links.radial)
    g_rad = 2 * op.kappa[:, None] * np.imag(nxt * np.conj(psi[:-1]))
    # angular links through the transport phases and the ring flux
    frame = op.to_frame(psi)
    spec = np.fft.fft(frame, axis=1)
    G = op.W[:, None] * np.fft.ifft(op.lam2 * spec, axis=1)
    g_gamma = -2.0 * np.imag(np.conj(G) * frame)
    dlam = 2.0 * op.mplus / grid.r[:, None] ** 2
    g_h = op.W * np.sum(dlam * np.abs(spec) ** 2, axis=1) / n
    after = np.cumsum(g_gamma[:, ::-1], axis=1)[:, ::-1] - g_gamma
    j = np.arange(n)[None, :]
    g_ang = after - np.sum(j * g_gamma, axis=1, keepdims=True) / n + g_h[:, None] / (2 * math.pi)
    # field energy
    curl, area = plaquette_curl(grid, links)
    dc = 2.0 * b * (curl - 1.0) / eps**2
    g_ang[:-1] += dc
    g_ang[1:] -= dc
    g_rad -= dc
    g_rad += np.roll(dc, 1, axis=1)
    cap_area = math.pi * grid.r[-1] ** 2
    cap_curl = eps**2 * links.angular[-1].sum() / cap_area
    g_ang[-1] += 2.0 * b * (cap_curl - 1.0) / eps**2
    return g_rad, g_ang


def _link_scale(grid):
    W = grid.ring_weight
    return 0.5 * (W[:-1] + W[1:]), np.maximum(W, W.max() * 1e-12)


def _link_residual(grid, g_rad, g_ang):
    w_rad, w_ang = _link_scale(grid)
    e2 = grid.eps**2
    return float(max(np.max(np.abs(g_rad) * e2 / w_rad[:, None]),
                     np.max(np.abs(g_ang) * e2 / w_ang[:, None])))


# The link update is parametrized by a stream function: one value per
# plaquette plus one for the inner cap, zero outside the disc.  An edge
# carries the difference of the values on its two sides, so plaquette
# circulations are a graph Laplacian of the stream function and pure-gauge
# directions (already covered by the phase of psi) are excluded.

def _stream_to_links(a, cap):
    n_r = a.shape[0] + 1
    ang = np.zeros((n_r, a.shape[1]))
    ang[1:] += a
    ang[:-1] -= a
    ang[-1] -= cap
    return a - np.roll(a, 1, axis=1), ang


def _links_to_stream(g_rad, g_ang):
    ga = g_rad - np.roll(g_rad, -1, axis=1) + g_ang[1:] - g_ang[:-1]
    return ga, -float(np.sum(g_ang[-1]))


class _StreamPreconditioner:
    """Per-Fourier-mode banded Hessian of the field energy plus ring-averaged kinetic terms."""

    def __init__(self, grid: DiscGrid, psi, links: Links, b: float):
        self.grid = grid
        n, n_p = grid.n_theta, grid.n_r - 1
        mod = np.abs(psi)
        op_kappa = grid.dtheta * grid.r_mid / grid.dr
        d_rad = 2 * op_kappa * np.mean(mod[1:] * mod[:-1], axis=1)
        d_ang = 2 * grid.node_width * np.mean(mod**2, axis=1) / (grid.r * grid.dtheta)
        inv_area = 1.0 / grid.plaquette_area()
        cap_area = math.pi * grid.r[-1] ** 2
        lam = 2.0 - 2.0 * np.cos(np.fft.fftfreq(n, 1.0 / n) * grid.dtheta)
        self.factors = []
        for q in range(n):
            size = n_p + 1 if q == 0 else n_p
            L = np.zeros((size, size))
            idx = np.arange(n_p)
            L[idx, idx] = -2.0 - lam[q]
            L[idx[1:], idx[:-1]] = 1.0
            L[idx[:-1], idx[1:]] = 1.0
            T = np.zeros((n_p + 1, size))
            T[idx, idx] = -1.0
            T[idx + 1, idx] = 1.0
            if q == 0:
                L[n_p - 1, n_p] = 1.0
                T[n_p, n_p] = -1.0
            H = 2 * b * (L[:n_p].T * inv_area) @ L[:n_p] + (T.T * d_ang) @ T
            H[:n_p, :n_p] += np.diag(lam[q] * d_rad)
            if q == 0:
                H *= n
                v = np.zeros(size)
                v[n_p - 1], v[n_p] = 1.0, -1.0
                H += 2 * b * n * n / cap_area * np.outer(v, v)
            band = np.zeros((3, size))
            for off in range(3):
                band[2 - off, off:] = np.diagonal(H, off)
            self.factors.append(cholesky_banded(band))

    def apply(self, ga, gcap):
        n = self.grid.n_theta
        spec = np.fft.fft(ga, axis=1)
        out = np.empty_like(spec)
        for q in range(n):
            if q == 0:
                rhs = np.append(spec[:, 0].real, gcap)
                sol = cho_solve_banded((self.factors[0], False), rhs)
                out[:, 0] = n * sol[:-1]
                cap = float(sol[-1])
            else:
                out[:, q] = cho_solve_banded((self.factors[q], False), spec[:, q])
        return np.fft.ifft(out, axis=1).real, cap


def _descend_links(grid, psi, links, b, centres, tol, maxiter, trace):
    """Preconditioned NCG over the stream function of the link update."""
    def energy(lk):
        return gl_energy(grid, psi, lk, b, coupled=True, centres=centres)

    def shifted(x, y):
        dr, da = _stream_to_links(x, y)
        return Links(links.radial + dr, links.angular + da)

    pre = _StreamPreconditioner(grid, psi, links, b)
    e = energy(links)
    res = float("inf")
    prev = None
    d = None
    for it in range(1, maxiter + 1):
        g_rad, g_ang = _link_gradient(grid, psi, links, b, centres)
        res = _link_residual(grid, g_rad, g_ang)
        trace.append((e, res))
        if res <= tol:
            return links, e, res, True
        ga, gc = _links_to_stream(g_rad, g_ang)
        za, zc = pre.apply(ga, gc)
        gz = _re_dot(ga, za) + gc * zc
        if prev is not None and it % RESTART:
            beta = max(0.0, (gz - _re_dot(ga, prev[2]) - gc * prev[3]) / prev[4])
            d = (-za + beta * d[0], -zc + beta * d[1])
        else:
            d = (-za, -zc)
        slope = _re_dot(ga, d[0]) + gc * d[1]
        if slope >= 0:
            d = (-za, -zc)
            slope = -gz
        e1 = energy(shifted(d[0], d[1]))
        curv = e1 - e - slope
        tau = -slope / (2 * curv) if curv > 0 else 1.0
        tau = min(max(tau, 0.1), 10.0)
        best = (1.0, e1)
        if tau != 1.0:
            e_tau = energy(shifted(tau * d[0], tau * d[1]))
            if e_tau < e1:
                best = (tau, e_tau)
        tau, e_new = best
        while e_new > e + 1e-4 * tau * slope + 1e-13 * abs(e):
            tau *= 0.5
            if tau < 1e-12:
                return links, e, res, False
            e_new = energy(shifted(tau * d[0], tau * d[1]))
        links, e = shifted(tau * d[0], tau * d[1]), e_new
        prev = (ga, gc, za, zc, gz)
    return links, e, res, res <= tol


def minimize_gl(eps: float, b: float, R: float = 1.0, grid: DiscGrid | None = None,
                mode: str = "fixed_A", seed: int | None = 0, init: str | DiscField = "trial",
                opt: OptimalProfile | None = None, tol: float = GRAD_TOL,
                maxiter: int = 5000, perturbation: float = 0.02) -> DiscField:
    """Critical point of the discrete GL energy reached by preconditioned NCG.

    ``init='trial'`` starts from the symmetric-gauge trial state, perturbed
    by a smooth random field when ``seed`` is not None; ``init='random'``
    starts from the trial modulus with a random low-mode phase.
    """
    check_regime(b)
    if mode not in ("fixed_A", "coupled"):
        raise ValueError("mode must be 'fixed_A' or 'coupled'")
    grid = grid or make_disc_grid(R, eps)
    opt = opt or profile_for_grid(grid, b)
    if isinstance(init, DiscField):
        start = init
    else:
        start = build_trial(eps, b, R, grid, opt)
    psi = start.psi.copy()
    links = start.links.copy()
    if init == "random":
        rng = np.random.default_rng(seed)
        phase = np.zeros(grid.n_theta)
        for m in range(1, 4):
            phase += rng.normal() * np.cos(m * grid.theta + rng.uniform(0, 2 * math.pi))
        psi = psi * np.exp(1j * phase)[None, :]
    elif seed is not None and perturbation > 0:
        psi = psi * (1.0 + _seed_perturbation(grid, seed, perturbation))
    psi[-1] = 0.0

    op = _Operator(grid, links, b=b)
    centres = op.centres
    trace: list = []
    if mode == "fixed_A":
        psi, energy, res, it, ok = _descend_psi(op, psi, b, eps, tol, maxiter, trace)
        if not ok:
            raise SolverError(f"GL descent stopped at residual {res:.3e}", trace)
    else:
        it = 0
        ok = False
        for cycle in range(200):
            psi, energy, res_psi, n_it, _ = _descend_psi(op, psi, b, eps, tol, maxiter, trace)
            it += n_it
            links, energy, res_lnk, _ = _descend_links(grid, psi, links, b, centres, tol,
                                                       maxiter, trace)
            op = _Operator(grid, links, centres, b=b)
            kin, pot, kpsi = _energy_parts(op, psi, b, eps)
            res_psi = _residual(op, _gradient(op, psi, kpsi, b, eps), eps)
            g_rad, g_ang = _link_gradient(grid, psi, links, b, centres)
            res_lnk = _link_residual(grid, g_rad, g_ang)
            res = max(res_psi, res_lnk)
            if res <= tol:
                ok = True
                break
        if not ok:
            raise SolverError(f"coupled descent stopped at residual {res:.3e}", trace)
        energy = gl_energy(grid, psi, links, b, coupled=True, centres=centres)
    return DiscField(grid, psi, links, eps, b, energy, mode, start.gauge, opt, res, it, trace)


# ----------------------------------------------------------------------------
# diagnostics


@dataclass
class WindingReport:
    degree: int
    predicted: float
    min_modulus_on_contour: float
    contour_r: float
    gap: float
    physical_estimate: float


def _ring_index(grid: DiscGrid, r: float) -> int:
    i = int(np.argmin(np.abs(grid.r - r)))
    if abs(grid.r[i] - r) > 1e-9 * grid.R:
        raise ShapeError(f"contour radius {r} is not a grid ring")
    return i


def phase_degree(values: np.ndarray) -> int:
    """Winding of a closed sampled loop from wrapped phase increments."""
    inc = np.angle(np.roll(values, -1) / values)
    return int(round(float(np.sum(inc)) / (2 * math.pi)))


def winding_number(fld: DiscField, contour_r: float | None = None,
                   threshold: float | None = None) -> WindingReport:
    g = fld.grid
    r = g.R if contour_r is None else contour_r
    i = _ring_index(g, r)
    ring = fld.psi[i]
    if threshold is None:
        f0 = fld.opt.profile.f[0] if fld.opt is not None else 1.0
        threshold = 0.05 * f0
    mmin = float(np.min(np.abs(ring)))
    if mmin < threshold:
        raise DegreeUndefined(f"|psi| drops to {mmin:.3e} < {threshold:.3e} on the contour")
    deg = phase_degree(ring)
    alpha = fld.opt.alpha_k if fld.opt is not None else float("nan")
    predicted = math.pi * g.R**2 / fld.eps**2 + abs(alpha) / fld.eps
    physical = -(g.R**2 / (2 * fld.eps**2) - g.R * abs(alpha) / fld.eps)
    return WindingReport(deg, predicted, mmin, float(g.r[i]), deg - predicted, physical)


def density_checks(fld: DiscField, opt: OptimalProfile | None = None,
                   gamma_eps: float | None = None) -> dict:
    """L2 error of |psi|^2 - f_k^2, sup error on the f_k >= gamma layer, boundary sup error."""
    opt = opt or fld.opt
    g = fld.grid
    if opt is None or opt.profile.f.size != g.n_layer:
        raise ShapeError("profile does not match the disc grid layer")
    f = opt.profile.f
    if gamma_eps is None:
        gamma_eps = abs(math.log(fld.eps)) ** -2
    if not 0.0 < gamma_eps < f[0]:
        raise PreconditionError(f"gamma_eps = {gamma_eps} leaves no boundary layer (f_k(0) = {f[0]:.4f})")
    fk = np.zeros(g.n_r)
    fk[:g.n_layer] = f
    mod = np.abs(fld.psi)
    diff2 = (mod**2 - fk[:, None] ** 2) ** 2
    l2 = math.sqrt(float(np.sum(g.ring_weight[:, None] * diff2)))
    layer = fk >= gamma_eps
    linf_layer = float(np.max(np.abs(mod[layer] - fk[layer, None])))
    linf_boundary = float(np.max(np.abs(mod[0] - f[0])))
    return {"l2": l2, "linf_layer": linf_layer, "linf_boundary": linf_boundary,
            "gamma_eps": gamma_eps, "layer_depth": float(g.t[layer].max())}


def agmon_decay_fit(fld: DiscField, floor: float = 1e-9) -> dict:
    """Linear fit of log(mean_theta |psi|) against t on the middle third of the layer."""
    g = fld.grid
    mean = np.mean(np.abs(fld.psi), axis=1)[:g.n_layer]
    t = g.t[:g.n_layer]
    top = float(np.max(mean))
    sel = (t >= g.t_max / 3) & (t <= 2 * g.t_max / 3) & (mean >= floor * top)
    if top <= 0 or np.sum(sel) < 3:
        return {"rate": 0.0, "quality": 0.0, "ok": False}
    x, y = t[sel], np.log(mean[sel])
    slope, icept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - slope * x - icept) ** 2))
    quality = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    rate = -float(slope)
    return {"rate": rate, "quality": quality, "ok": rate > 0 and quality >= 0.95}


def layer_gauge(fld: DiscField):
    """Gauge phase chi making layer radial links vanish and boundary links uniform.

    Returns (chi on the layer rings, delta_eps) with delta_eps recomputed
    from the boundary circulation of the stored links.
    """
    g = fld.grid
    ang0 = fld.links.angular[0]
    turns = ang0.sum() / (2 * math.pi)
    delta = (turns - math.floor(turns)) / g.R
    uniform = g.R * delta * g.dtheta
    chi = np.zeros((g.n_layer, g.n_theta))
    chi[0] = np.cumsum(ang0 - uniform) - (ang0 - uniform)
    for i in range(g.n_layer - 1):
        chi[i + 1] = chi[i] + fld.links.radial[i]
    return chi, delta


def extract_layer_field(fld: DiscField, opt: OptimalProfile | None = None) -> LayerField:
    """psi(s, t) on the layer rings in the boundary gauge (s = R theta / eps)."""
    opt = opt or fld.opt
    g = fld.grid
    if opt is not None and opt.profile.f.size != g.n_layer:
        raise ShapeError("profile does not match the disc grid layer")
    chi, delta = layer_gauge(fld)
    psi = (fld.psi[:g.n_layer] * np.exp(1j * chi)).T
    return LayerField(psi, g.k, fld.eps, fld.b, delta, g.c0, 2 * math.pi * g.R)


def exterior_remainder(fld: DiscField) -> float:
    """2D energy minus the layer energy of the extracted field."""
    from .layer import eval_layer_energy

    coupled = fld.mode == "coupled"
    total = gl_energy(fld.grid, fld.psi, fld.links, fld.b, coupled=coupled)
    return total - eval_layer_energy(extract_layer_field(fld), "disc")


def gauge_transform(fld: DiscField, chi: np.ndarray) -> DiscField:
    """psi -> psi exp(i chi), links -> links - (chi_b - chi_a)."""
    links = Links(fld.links.radial - (chi[1:] - chi[:-1]),
                  fld.links.angular - (np.roll(chi, -1, axis=1) - chi))
    return replace(fld, psi=fld.psi * np.exp(1j * chi), links=links)


def energy_gap(fld: DiscField, opt: OptimalProfile | None = None) -> float:
    """E_2D - (2 pi R / eps) E1D_k."""
    opt = opt or fld.opt
    return fld.energy - 2 * math.pi * fld.grid.R * opt.energy / fld.eps
