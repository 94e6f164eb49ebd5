import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glsurface import layer, oracles
from glsurface.discrete import potential
from glsurface.profile1d import energy_of, optimize_alpha, profile_at
from glsurface.layer import LayerField

N_S = 64


def _mode_step(opt):
    # with k = 1 the perimeter is 2 pi, so one Fourier mode in s shifts alpha by eps
    return 2 * math.pi * opt.profile.params.eps / (2 * math.pi)


def _delta(opt):
    return layer.admissible_delta(opt.alpha_k, opt.profile.params.eps, 2 * math.pi, near=0.3)


def _random_field(opt, seed, amp=0.1):
    rng = np.random.default_rng(seed)
    base = layer.plane_wave_field(opt, N_S, _delta(opt), perimeter=2 * math.pi)
    s = base.s[:, None] / base.length_s
    bump = sum((rng.normal() + 1j * rng.normal()) * np.exp(2j * math.pi * m * s)
               for m in range(-2, 3))
    psi = base.psi * (1 + amp * bump * np.exp(-base.t[None, :]))
    return LayerField(psi, base.k, base.eps, base.b, base.delta_eps, base.c0, base.perimeter)


def test_zero_field_has_zero_energy(curved_opt):
    p = curved_opt.profile.params
    fld = LayerField(np.zeros((N_S, p.n_points)), 1.0, p.eps, p.b, 0.0)
    assert layer.eval_layer_energy(fld) == 0.0


def test_integer_phase_plane_wave_energy(curved_opt):
    p = curved_opt.profile.params
    a_int = p.eps * math.floor(curved_opt.alpha_k / p.eps)
    prof = profile_at(curved_opt, a_int)
    s = np.arange(N_S) * (2 * math.pi / p.eps) / N_S
    psi = np.exp(-1j * a_int * s)[:, None] * prof.f[None, :]
    fld = LayerField(psi, 1.0, p.eps, p.b, 0.0)
    e = layer.eval_layer_energy(fld)
    assert e == pytest.approx(fld.length_s * prof.energy, rel=1e-12)
    gap = prof.energy - curved_opt.energy
    assert 0 <= gap <= p.eps**2 * abs(math.log(p.eps))


@pytest.mark.parametrize("m", [-2, 1, 3])
def test_gauge_shift_equals_shifted_alpha(curved_opt, m):
    fld = layer.plane_wave_field(curved_opt, N_S, _delta(curved_opt), perimeter=2 * math.pi,
                                 modes=m)
    p = curved_opt.profile.params
    grid = curved_opt.profile.grid()
    v = potential(grid.t, curved_opt.alpha_k - m * _mode_step(curved_opt), p.k, p.eps)
    expected = fld.length_s * energy_of(grid, curved_opt.profile.f, v, p.b)
    assert layer.eval_layer_energy(fld) == pytest.approx(expected, rel=1e-12)


def test_plane_wave_splitting_is_trivial(curved_opt):
    fld = layer.plane_wave_field(curved_opt, N_S, _delta(curved_opt), perimeter=2 * math.pi)
    sp = layer.split_energy(fld, curved_opt)
    assert abs(sp.reduced) <= 1e-12 * abs(sp.total)
    assert sp.main == pytest.approx(sp.total, rel=1e-12)
    red = layer.compute_current_vorticity(fld, curved_opt)
    terms = layer.reduced_terms(red)
    for x in (terms.kinetic, terms.momentum, terms.quartic):
        assert abs(x) <= 1e-12
    assert np.max(np.abs(red.current_s)) <= 1e-12
    assert np.max(np.abs(red.vorticity)) <= 1e-12
    assert abs(layer.boundary_circulation_u(red)) <= 1e-10


@pytest.mark.parametrize("variant", layer.VARIANTS)
def test_splitting_identity_random_fields(curved_opt, variant):
    # the flat variant pairs the curved-strip field with the k = 0 profile at the same eps
    opt = curved_opt if variant == "disc" else optimize_alpha(0.0, 0.05, 1.5, n_points=1024)
    for seed in range(3):
        fld = _random_field(opt, seed)
        fld = LayerField(fld.psi, 1.0, fld.eps, fld.b, fld.delta_eps, fld.c0, fld.perimeter)
        sp = layer.split_energy(fld, opt, variant)
        assert abs(sp.main + sp.reduced - sp.total) <= 1e-9 * abs(sp.total)


def test_one_mode_phase_terms(curved_opt):
    m = 2
    q = _mode_step(curved_opt)
    fld = layer.plane_wave_field(curved_opt, N_S, _delta(curved_opt), perimeter=2 * math.pi,
                                 modes=m)
    red = layer.compute_current_vorticity(fld, curved_opt)
    terms = layer.reduced_terms(red)
    grid = curved_opt.profile.grid()
    p = curved_opt.profile.params
    g = 2 * layer.momentum_density(grid.t, curved_opt.alpha_k, p.k, p.eps) * curved_opt.profile.f**2
    expected = -m * q * fld.length_s * float(np.sum(grid.c * grid.h * g))
    assert abs(terms.momentum - expected) <= 1e-9 * max(1.0, abs(expected))
    assert layer.boundary_circulation_u(red) == pytest.approx(2 * math.pi * m, abs=1e-10)
    assert np.max(np.abs(red.vorticity)) <= 1e-12
    assert terms.chain_bound <= terms.reduced + 1e-12


def test_vortex_insertion(curved_opt):
    base = layer.plane_wave_field(curved_opt, 128, _delta(curved_opt), perimeter=2 * math.pi)
    v, _, _ = oracles.synthetic_vortex(base.n_s, base.n_t, base.length_s, base.t_max,
                                       centre=(0.5, 0.1), core=0.5)
    fld = LayerField(base.psi * v, base.k, base.eps, base.b, base.delta_eps, base.c0,
                     base.perimeter)
    sp = layer.split_energy(fld, curved_opt)
    assert abs(sp.main + sp.reduced - sp.total) <= 1e-9 * abs(sp.total)
    assert sp.reduced > 0
    red = layer.compute_current_vorticity(fld, curved_opt)
    assert red.checks["bound_ok"]


def test_synthetic_vortex_circulation():
    v, s, t = oracles.synthetic_vortex(256, 128, 20.0, 6.0)
    mu, g2 = layer.plaquette_vorticity(v, s[1] - s[0], t[1] - t[0], wrap=1.0)
    assert np.max(np.abs(mu) - g2) <= 1e-10
    i0, i1, j0, j1 = 64, 192, 21, 107
    loop = np.concatenate([v[i0:i1, j0], v[i1, j0:j1], v[i1:i0:-1, j1], v[i0, j1:j0:-1]])
    circ = layer.loop_circulation(loop / np.abs(loop))
    assert abs(circ - 2 * math.pi) <= 0.01 * 2 * math.pi


def test_phase_only_field_has_no_vorticity():
    s = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    u = np.exp(1j * (3 * s + 0.4 * np.sin(s)))[:, None] * np.ones(20)[None, :]
    mu, _ = layer.plaquette_vorticity(u, s[1], 0.1, wrap=1.0)
    assert np.max(np.abs(mu)) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_vorticity_bound_random(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(12, 9)) + 1j * rng.normal(size=(12, 9))
    mu, g2 = layer.plaquette_vorticity(v, rng.uniform(0.01, 2), rng.uniform(0.01, 2),
                                       wrap=np.exp(1j * rng.uniform(0, 6.3)))
    assert np.all(np.abs(mu) <= g2 + 1e-10)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 0.3))
def test_chain_bound_below_reduced(curved_opt, seed, amp):
    fld = _random_field(curved_opt, seed, amp)
    terms = layer.reduced_terms(layer.compute_current_vorticity(fld, curved_opt), strict=False)
    assert terms.chain_bound <= terms.reduced + 1e-10 * max(1.0, terms.kinetic)
    assert abs(terms.momentum - terms.momentum_by_parts) <= 1e-9 * max(1.0, abs(terms.momentum))


def test_field_bin_roundtrip(tmp_path, curved_opt):
    fld = _random_field(curved_opt, 7)
    path = tmp_path / "field.bin"
    layer.write_field_bin(fld, path)
    back = layer.read_field_bin(path, c0=fld.c0, perimeter=fld.perimeter)
    assert np.array_equal(back.psi, fld.psi)
    assert (back.k, back.eps, back.b, back.delta_eps) == (fld.k, fld.eps, fld.b, fld.delta_eps)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(layer.ShapeError):
        layer.read_field_bin(path)


def test_mismatch_errors(curved_opt, flat_opt):
    fld = _random_field(curved_opt, 1)
    with pytest.raises(layer.ShapeError):
        layer.split_energy(fld, flat_opt)
    zero = layer.plane_wave_field(curved_opt, N_S, _delta(curved_opt), perimeter=2 * math.pi)
    opt = type(curved_opt)(curved_opt.alpha_k, curved_opt.profile, curved_opt.fh_residual)
    f = opt.profile.f.copy()
    f[-1] = 0.0
    from dataclasses import replace

    opt = type(curved_opt)(opt.alpha_k, replace(opt.profile, f=f), opt.fh_residual)
    with pytest.raises(layer.TrivialProfileError):
        layer.compute_current_vorticity(zero, opt)
    with pytest.raises(ValueError):
        layer.eval_layer_energy(zero, "torus")
