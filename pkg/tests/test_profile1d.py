import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glsurface import oracles
from glsurface.discrete import RegimeError
from glsurface.profile1d import (
    THETA0,
    ProfileParams,
    TrivialRegime,
    check_regime,
    energy_identity,
    energy_of,
    fh_derivative,
    gradient_bound_check,
    minimize_profile,
    ode_residual,
    optimize_alpha,
    pointwise_bounds_check,
)


def test_large_b_gives_zero_profile():
    for k, alpha, eps in [(0.0, -0.77, 0.0), (1.0, -0.5, 0.05), (0.5, -1.5, 0.08)]:
        prof = minimize_profile(ProfileParams(k, alpha, eps, 2.0, n_points=512))
        assert prof.trivial and prof.energy == 0.0
        assert ode_residual(prof) == 0.0
        assert energy_identity(prof) == (0.0, 0.0)


def test_regime_errors():
    with pytest.raises(TrivialRegime):
        check_regime(2.0)
    with pytest.raises(RegimeError):
        check_regime(0.9)
    check_regime(1.0, closed_left=True)
    with pytest.raises(TrivialRegime):
        optimize_alpha(0.0, 0.0, 2.0, n_points=256)


def test_flat_profile_matches_projected_oracle():
    alpha = -math.sqrt(THETA0)
    p = ProfileParams(0.0, alpha, 0.0, 1.5, n_points=1025)
    prof = minimize_profile(p)
    f, e = oracles.projected_profile_oracle(0.0, alpha, 0.0, 1.5, p.length, 1025)
    assert prof.energy < 0
    assert abs(prof.energy - e) <= 1e-8
    assert np.max(np.abs(prof.f - f)) <= 1e-6


def test_oracle_energy_equals_discrete_functional(flat_opt):
    prof = flat_opt.profile
    p = prof.params
    e, g = oracles.profile_energy_oracle(prof.f, p.k, p.alpha, p.eps, p.b, p.length, p.n_points)
    assert abs(e - prof.energy) <= 1e-13
    assert np.max(np.abs(g)) <= 1e-9


def test_curvature_changes_energy_at_order_eps():
    ratios = []
    for eps in (0.1, 0.05, 0.025):
        curved = minimize_profile(ProfileParams(1.0, -0.78, eps, 1.5, n_points=1024))
        flat = minimize_profile(ProfileParams(0.0, -0.78, eps, 1.5, n_points=1024))
        ratios.append(abs(curved.energy - flat.energy) / eps)
    # |dE| / eps stays bounded and roughly constant
    assert max(ratios) <= 0.1
    assert max(ratios) / min(ratios) <= 2.0


def test_optimal_profile_properties(curved_opt, flat_opt):
    for opt in (flat_opt, curved_opt):
        prof = opt.profile
        assert np.all(prof.f >= 0) and np.all(prof.f <= 1)
        assert prof.energy <= 0
        assert opt.alpha_k < 0
        assert abs(opt.fh_residual) <= 1e-8
        assert ode_residual(prof) <= 1e-10
        lhs, rhs = energy_identity(prof)
        assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


def test_near_threshold_alpha_is_de_gennes_point():
    opt = optimize_alpha(0.0, 0.0, 1.69, n_points=1024)
    assert abs(opt.alpha_k + math.sqrt(THETA0)) <= 0.02


def test_alpha_k_matches_brute_force_scan(flat_opt):
    def energy(a):
        return minimize_profile(ProfileParams(0.0, a, 0.0, 1.5, n_points=1024),
                                init=flat_opt.profile.f).energy

    coarse, _ = oracles.alpha_scan(energy, -1.2, -0.4, 0.02)
    fine, _ = oracles.alpha_scan(energy, coarse - 0.02, coarse + 0.02, 1e-3)
    assert abs(fine - flat_opt.alpha_k) <= 2e-3


def test_alpha_shift_is_order_eps(flat_opt):
    ratios = []
    for eps in (0.1, 0.05, 0.025):
        opt = optimize_alpha(1.0, eps, 1.5, n_points=1024)
        ratios.append(abs(opt.alpha_k - flat_opt.alpha_k) / eps)
    assert max(ratios) <= 3.0


def test_perturbed_profile_breaks_identity(flat_opt):
    prof = flat_opt.profile
    grid = prof.grid()
    g = prof.f + 0.01
    lhs = energy_of(grid, g, prof.potential(), 1.5)
    rhs = -grid.integrate(g**4) / 3.0
    assert lhs - rhs > 0


def test_fourth_order_residual_converges_at_second_order():
    res = []
    for n in (513, 1025):
        prof = minimize_profile(ProfileParams(0.0, -0.77, 0.0, 1.5, n_points=n))
        res.append(ode_residual(prof, "fourth"))
    assert 3.0 <= res[0] / res[1] <= 5.0


def test_bound_reports(flat_opt, curved_opt):
    rep = pointwise_bounds_check(flat_opt.profile)
    assert rep["ok"] and np.isfinite(rep["C_upper"])
    assert flat_opt.profile.f[0] >= rep["c_lower"] * math.exp(-1.0) * (1 - 1e-12)
    g = gradient_bound_check(curved_opt.profile)
    assert g["monotone"] and np.isfinite(g["C_near"]) and np.isfinite(g["C_tail"])


@settings(max_examples=12, deadline=None)
@given(st.floats(-1.4, -0.3), st.floats(1.05, 1.65), st.sampled_from([0.0, 1.0]))
def test_profile_invariants(alpha, b, k):
    eps = 0.05 if k else 0.0
    prof = minimize_profile(ProfileParams(k, alpha, eps, b, n_points=400))
    assert np.all(prof.f >= 0) and np.all(prof.f <= 1 + 1e-12)
    assert prof.energy <= 0
    lhs, rhs = energy_identity(prof)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))


@settings(max_examples=8, deadline=None)
@given(st.floats(-1.2, -0.4))
def test_fh_derivative_matches_energy_difference(alpha):
    # envelope theorem: dE/dalpha equals the explicit alpha-derivative at the minimizer
    h = 1e-4
    e = [minimize_profile(ProfileParams(1.0, alpha + s, 0.05, 1.5, n_points=400)).energy
         for s in (-h, h)]
    prof = minimize_profile(ProfileParams(1.0, alpha, 0.05, 1.5, n_points=400))
    assert abs((e[1] - e[0]) / (2 * h) - fh_derivative(prof)) <= 1e-6
