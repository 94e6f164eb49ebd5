"""Boundary-layer functionals on the rescaled strip [0, L_s] x [0, t_eps].

psi is stored on n_s distinct s-nodes (periodic, s_j = j L_s / n_s) and on
the same t-nodes as the 1D profile.  t-derivatives are forward differences
with the profile's weights; s-derivatives are spectral.  Every row uses the
same band of n_s Fourier modes, centred on the kinetic minimum of the gauge
potential at t = 0, so gauge shifts by whole modes are exact and the
s-derivative is anti-Hermitian across rows.

With psi = f u exp(-i beta s), beta = alpha + eps delta, the covariant
s-derivative splits pointwise as exp(-i beta s) f (D u - i X u) where
X = t + alpha - eps k t^2 / 2 and D is the twisted spectral derivative.
Combined with the discrete Euler-Lagrange equation of f this makes the
energy splitting an identity at round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .costfn import CertificateError, certified_end, potential_F_midpoints
from .discrete import interval_length, make_grid, momentum_density
from .profile1d import OptimalProfile

VARIANTS = ("disc", "flat")


class ShapeError(ValueError):
    pass


class TrivialProfileError(ZeroDivisionError):
    """The profile vanishes somewhere, so psi / f is undefined."""


def gauge_delta(R: float, eps: float) -> float:
    """Fractional flux offset making the boundary gauge phase single valued.

    The boundary circulation of the symmetric gauge is R^2 / (2 eps^2) per
    unit angle; removing its integer part leaves R * delta.
    """
    x = R * R / (2.0 * eps * eps)
    return (x - math.floor(x)) / R


def gauge_potential(t, k: float, eps: float, delta: float) -> np.ndarray:
    return -t + 0.5 * eps * k * t * t + eps * delta


@dataclass(frozen=True)
class LayerField:
    psi: np.ndarray
    k: float
    eps: float
    b: float
    delta_eps: float
    c0: float = 4.0
    perimeter: float = 0.0

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.ndim != 2 or psi.shape[0] < 4 or psi.shape[1] < 3:
            raise ShapeError(f"psi must be (n_s >= 4, n_t >= 3), got {psi.shape}")
        if not np.all(np.isfinite(psi)):
            raise ValueError("psi has non-finite entries")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.k < 0:
            raise ValueError("curvature must be non-negative")
        object.__setattr__(self, "psi", psi)
        if self.perimeter <= 0.0:
            object.__setattr__(self, "perimeter", 2.0 * math.pi / self.k if self.k > 0 else 2.0 * math.pi)

    @property
    def n_s(self) -> int:
        return self.psi.shape[0]

    @property
    def n_t(self) -> int:
        return self.psi.shape[1]

    @property
    def length_s(self) -> float:
        return self.perimeter / self.eps

    @property
    def h_s(self) -> float:
        return self.length_s / self.n_s

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.n_s) * self.h_s

    @property
    def t_max(self) -> float:
        return interval_length(self.eps, self.c0)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_t)

    def grid(self, variant: str = "disc"):
        k = self.k if variant == "disc" else 0.0
        return make_grid(self.t_max, self.n_t, k, self.eps)

    def wavenumbers(self) -> np.ndarray:
        """FFT-ordered wavenumbers of the shared band."""
        L = self.length_s
        centre = round(-self.eps * self.delta_eps * L / (2.0 * math.pi))
        lo = centre - self.n_s // 2
        m = lo + np.mod(np.arange(self.n_s) - lo, self.n_s)
        return 2.0 * math.pi * m / L


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")


def _masked(fld: LayerField, variant: str) -> np.ndarray:
    psi = fld.psi
    if variant == "flat":
        psi = psi.copy()
        psi[:, -1] = 0.0
    return psi


def eval_layer_energy(fld: LayerField, variant: str = "disc") -> float:
    """Quadrature value of the layer functional (disc) or its flat version.

    The flat version drops the curvature weight and the t^2 term of the
    gauge potential, and imposes psi = 0 on the last row.
    """
    _check_variant(variant)
    grid = fld.grid(variant)
    k = grid.k
    psi = _masked(fld, variant)
    a = gauge_potential(grid.t, k, fld.eps, fld.delta_eps)
    kw = fld.wavenumbers()
    cov = np.fft.ifft(1j * (kw[:, None] + a[None, :]) * np.fft.fft(psi, axis=0), axis=0)
    kin_t = np.sum(grid.w_mid * np.abs(np.diff(psi, axis=1)) ** 2) / grid.h
    m = grid.mass
    rho = np.abs(psi) ** 2
    kin_s = np.sum(m / grid.w**2 * np.abs(cov) ** 2)
    pot = -np.sum(m * (2.0 * rho - rho * rho)) / (2.0 * fld.b)
    return float(fld.h_s * (kin_t + kin_s + pot))


# ----------------------------------------------------------------------------
# reduced field


@dataclass
class ReducedField:
    u: np.ndarray              # (n_s, n_t)
    ds_u: np.ndarray           # twisted spectral s-derivative of u
    current_s: np.ndarray      # (iu, d_s u) = Im(conj(u) d_s u)
    vorticity: np.ndarray      # plaquettes (n_s, n_t - 1)
    grad_sq: np.ndarray        # |D_s u|^2 + |D_t u|^2 on the same plaquettes
    beta: float
    source: LayerField
    opt: OptimalProfile
    variant: str = "disc"
    checks: dict = field(default_factory=dict)


def _profile_for(fld: LayerField, opt: OptimalProfile, variant: str) -> np.ndarray:
    p = opt.profile.params
    k = fld.k if variant == "disc" else 0.0
    if opt.profile.f.shape[0] != fld.n_t:
        raise ShapeError(f"profile has {opt.profile.f.shape[0]} nodes, field has {fld.n_t}")
    mismatch = [name for name, x, y in (("k", p.k, k), ("eps", p.eps, fld.eps),
                                         ("b", p.b, fld.b), ("c0", p.c0, fld.c0))
                if not math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-14)]
    if mismatch:
        raise ShapeError(f"profile and field disagree on {', '.join(mismatch)}")
    f = opt.profile.f
    if np.min(f) <= 0.0:
        raise TrivialProfileError("profile has zeros: splitting needs f > 0")
    return f


def plaquette_vorticity(v: np.ndarray, h_s: float, h_t: float, wrap: complex | None = None):
    """Discrete vorticity 2 Im(conj(D_s v) D_t v) and |D_s v|^2 + |D_t v|^2.

    D_s, D_t are edge-averaged differences on each plaquette, so
    |mu| <= |grad v|^2 holds exactly.  With ``wrap`` the s-direction is
    closed with v(L_s) = wrap * v(0); without it only interior plaquettes
    are returned.
    """
    if wrap is not None:
        v = np.concatenate([v, wrap * v[:1]], axis=0)
    v00, v10 = v[:-1, :-1], v[1:, :-1]
    v01, v11 = v[:-1, 1:], v[1:, 1:]
    ds = ((v10 - v00) + (v11 - v01)) / (2.0 * h_s)
    dt = ((v01 - v00) + (v11 - v10)) / (2.0 * h_t)
    mu = 2.0 * np.imag(np.conj(ds) * dt)
    return mu, np.abs(ds) ** 2 + np.abs(dt) ** 2


def loop_circulation(values: np.ndarray) -> float:
    """Sum of Im(conj(v_a) v_b) over consecutive points of a closed loop."""
    v = np.asarray(values)
    return float(np.sum(np.imag(np.conj(v) * np.roll(v, -1))))


def compute_current_vorticity(fld: LayerField, opt: OptimalProfile,
                              variant: str = "disc") -> ReducedField:
    """u = psi exp(i beta s) / f with its s-current and plaquette vorticity."""
    _check_variant(variant)
    f = _profile_for(fld, opt, variant)
    psi = _masked(fld, variant)
    beta = opt.alpha_k + fld.eps * fld.delta_eps
    s = fld.s
    v = psi / f[None, :]
    twist = np.exp(1j * beta * s)[:, None]
    u = twist * v
    kw = fld.wavenumbers()
    ds_u = twist * np.fft.ifft(1j * (kw[:, None] + beta) * np.fft.fft(v, axis=0), axis=0)
    current = np.imag(np.conj(u) * ds_u)
    h_t = fld.t[1] - fld.t[0]
    mu, grad_sq = plaquette_vorticity(u, fld.h_s, h_t, wrap=np.exp(1j * beta * fld.length_s))
    excess = float(np.max(np.abs(mu) - grad_sq))
    checks = {"max_bound_excess": excess, "bound_ok": excess <= 1e-10}
    return ReducedField(u, ds_u, current, mu, grad_sq, beta, fld, opt, variant, checks)


def boundary_circulation_u(red: ReducedField) -> float:
    """int (iu, d_s u) ds along t = 0."""
    return float(red.source.h_s * np.sum(red.current_s[:, 0]))


# ----------------------------------------------------------------------------
# splitting and the lower-bound chain


class Split(NamedTuple):
    main: float
    reduced: float
    total: float


@dataclass
class ReducedTerms:
    kinetic: float
    momentum: float
    quartic: float
    momentum_by_parts: float
    chain_bound: float
    certified_bound: float
    t_bar: float
    d_eps: float

    @property
    def reduced(self) -> float:
        return self.kinetic + self.momentum + self.quartic


def _term_arrays(red: ReducedField):
    fld, opt = red.source, red.opt
    grid = fld.grid(red.variant)
    f = opt.profile.f
    m = grid.mass
    rho = np.abs(red.u) ** 2
    du_t = np.diff(red.u, axis=1)
    kin_cells = grid.w_mid * (f[:-1] * f[1:]) * np.abs(du_t) ** 2 / grid.h
    kin_nodes = m * f**2 / grid.w**2 * np.abs(red.ds_u) ** 2
    g = 2.0 * momentum_density(grid.t, opt.alpha_k, grid.k, grid.eps) * f**2
    mom_nodes = -grid.c * grid.h * g * red.current_s
    quart_nodes = m * f**4 * (1.0 - rho) ** 2 / (2.0 * fld.b)
    return grid, kin_cells, kin_nodes, mom_nodes, quart_nodes, du_t


def reduced_terms(red: ReducedField, d_eps: float = 0.0, strict: bool = True) -> ReducedTerms:
    """Kinetic, momentum and quartic parts of the reduced energy, plus bounds.

    ``chain_bound`` is the discrete lower bound obtained by moving the
    momentum term onto t-differences (summation by parts against F at
    cell midpoints) and applying 2ab <= a^2 + b^2 cell by cell; it is an
    exact inequality for every field.  ``certified_bound`` keeps only the
    cost-weighted kinetic terms on the certified interval [0, t_bar] plus
    the d_eps share of the kinetic energy and the quartic term.
    """
    fld, opt = red.source, red.opt
    grid, kin_cells, kin_nodes, mom_nodes, quart_nodes, du_t = _term_arrays(red)
    hs = fld.h_s
    kinetic = hs * float(np.sum(kin_cells) + np.sum(kin_nodes))
    momentum = hs * float(np.sum(mom_nodes))
    quartic = hs * float(np.sum(quart_nodes))

    f, t = opt.profile.f, grid.t
    F_mid = potential_F_midpoints(opt)
    F_end = float(np.sum(grid.c * grid.h * 2.0 * momentum_density(t, opt.alpha_k, grid.k, grid.eps) * f**2))
    J = hs * np.sum(red.current_s, axis=0)
    by_parts = float(np.sum(F_mid * np.diff(J)) - F_end * J[-1])

    absF = np.abs(F_mid)
    cell_w = grid.w_mid * ((1.0 - d_eps) * f[:-1] * f[1:] - absF) / grid.h
    side = absF / (2.0 * grid.w_mid)
    node_w = (1.0 - d_eps) * grid.c * f**2 / grid.w
    node_w[:-1] -= side
    node_w[1:] -= side
    node_w *= grid.h
    cost_cells = cell_w * np.abs(du_t) ** 2
    cost_nodes = node_w * np.abs(red.ds_u) ** 2
    d_part = d_eps * kinetic
    chain = hs * float(np.sum(cost_cells) + np.sum(cost_nodes)) + d_part + quartic - F_end * J[-1]

    t_bar = certified_end(f, t, fld.eps) if fld.eps > 0 else float(t[-1])
    cells_in = t[1:] <= t_bar
    nodes_in = t <= t_bar
    certified = hs * float(np.sum(cost_cells[:, cells_in]) + np.sum(cost_nodes[:, nodes_in])) \
        + d_part + quartic
    out = ReducedTerms(kinetic, momentum, quartic, by_parts, chain, certified, t_bar, d_eps)
    tol = 1e-8 * max(1.0, kinetic + quartic)
    if strict and out.reduced < certified - tol:
        raise CertificateError("reduced energy below the certified lower bound",
                               t_bar, out.reduced - certified)
    return out


def split_energy(fld: LayerField, opt: OptimalProfile, variant: str = "disc") -> Split:
    """(main, reduced) with main = (|boundary| / eps) E1D and total for reference."""
    red = compute_current_vorticity(fld, opt, variant)
    _, kin_cells, kin_nodes, mom_nodes, quart_nodes, _ = _term_arrays(red)
    reduced = fld.h_s * float(np.sum(kin_cells) + np.sum(kin_nodes)
                              + np.sum(mom_nodes) + np.sum(quart_nodes))
    main = fld.length_s * opt.energy
    return Split(main, reduced, eval_layer_energy(fld, variant))


def plane_wave_field(opt: OptimalProfile, n_s: int, delta_eps: float, alpha: float | None = None,
                     perimeter: float = 0.0, modes: int = 0) -> LayerField:
    """psi = f exp(-i (alpha + eps delta) s) times exp(i m 2 pi s / L_s)."""
    p = opt.profile.params
    alpha = opt.alpha_k if alpha is None else alpha
    fld = LayerField(np.zeros((n_s, p.n_points), complex), p.k, p.eps, p.b, delta_eps,
                     p.c0, perimeter)
    turns = (alpha + p.eps * delta_eps) * fld.length_s / (2.0 * math.pi)
    if abs(turns - round(turns)) > 1e-9:
        raise ValueError("alpha + eps * delta is not a whole number of modes; "
                         "the plane wave would not be periodic")
    s = fld.s
    phase = -(alpha + p.eps * delta_eps) * s + 2.0 * math.pi * modes * s / fld.length_s
    psi = np.exp(1j * phase)[:, None] * opt.profile.f[None, :]
    return LayerField(psi, p.k, p.eps, p.b, delta_eps, p.c0, fld.perimeter)


def admissible_delta(alpha: float, eps: float, perimeter: float, near: float = 0.0) -> float:
    """delta closest to ``near`` with alpha + eps delta a multiple of 2 pi eps / perimeter.

    With such a delta the plane wave exp(-i (alpha + eps delta) s) is
    periodic on [0, perimeter / eps].
    """
    q = 2.0 * math.pi * eps / perimeter
    m = round((alpha + eps * near) / q)
    return (m * q - alpha) / eps


# ----------------------------------------------------------------------------
# field.bin: uint32 n_s, n_t; float64 k, eps, b, delta_eps; then psi row-major
# as interleaved (re, im) float64, all little-endian.

_HEADER = np.dtype([("n_s", "<u4"), ("n_t", "<u4"), ("k", "<f8"), ("eps", "<f8"),
                    ("b", "<f8"), ("delta_eps", "<f8")])


def write_field_bin(fld: LayerField, path) -> None:
    head = np.array([(fld.n_s, fld.n_t, fld.k, fld.eps, fld.b, fld.delta_eps)], dtype=_HEADER)
    body = np.ascontiguousarray(fld.psi, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(head.tobytes())
        fh.write(body.tobytes())


def read_field_bin(path, c0: float = 4.0, perimeter: float = 0.0) -> LayerField:
    """Inverse of ``write_field_bin``; c0 and the perimeter are not stored in the file."""
    raw = open(path, "rb").read()
    if len(raw) < _HEADER.itemsize:
        raise ShapeError("field file is shorter than its header")
    head = np.frombuffer(raw[:_HEADER.itemsize], dtype=_HEADER)[0]
    n_s, n_t = int(head["n_s"]), int(head["n_t"])
    body = raw[_HEADER.itemsize:]
    if len(body) != 16 * n_s * n_t:
        raise ShapeError(f"field file holds {len(body)} bytes, expected {16 * n_s * n_t}")
    psi = np.frombuffer(body, dtype="<c16").reshape(n_s, n_t).astype(complex)
    return LayerField(psi, float(head["k"]), float(head["eps"]), float(head["b"]),
                      float(head["delta_eps"]), c0, perimeter)
