import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glsurface import costfn
from glsurface.profile1d import OptimalProfile, ProfileParams, minimize_profile, optimize_alpha


def _zero_opt():
    prof = minimize_profile(ProfileParams(0.0, -0.7, 0.0, 2.0, n_points=256))
    return OptimalProfile(-0.7, prof, 0.0)


def test_trivial_profile_has_zero_potential():
    assert np.all(costfn.potential_F(_zero_opt()) == 0.0)


def test_F_endpoints_and_sign(flat_opt, curved_opt):
    for opt in (flat_opt, curved_opt):
        F = costfn.potential_F(opt)
        scale = np.max(np.abs(F))
        assert F[0] == 0.0
        assert abs(F[-1]) <= 1e-8 * scale
        assert np.max(F) <= 1e-8 * scale


def test_F_minimum_near_turning_point(flat_opt):
    F = costfn.potential_F(flat_opt)
    t = flat_opt.profile.t
    h = t[1] - t[0]
    assert abs(t[np.argmin(F)] - abs(flat_opt.alpha_k)) <= 2 * h


def test_non_optimal_profile_rejected(flat_opt):
    shifted = OptimalProfile(flat_opt.alpha_k + 0.05, flat_opt.profile, 1e-3)
    with pytest.raises(costfn.PreconditionError):
        costfn.potential_F(shifted)


def test_closed_form_discrepancy_is_second_order():
    d = []
    for n in (1024, 2047):
        opt = optimize_alpha(0.0, 0.0, 1.5, n_points=n)
        d.append(costfn.F0_closed_form_check(opt))
    assert d[0] <= 1e-4
    assert 3.0 <= d[0] / d[1] <= 5.0


def test_closed_form_extrapolated_to_roundoff():
    assert costfn.F0_closed_form_extrapolated(1.5, 1024) <= 1e-8


def test_closed_form_vanishes_at_origin(flat_opt):
    f0 = flat_opt.profile.f[0]
    a, b = flat_opt.alpha_k, 1.5
    expected = (a * a - 1 / b) * f0**2 + f0**4 / (2 * b)
    assert costfn.F0_closed_form(flat_opt)[0] == pytest.approx(expected, rel=1e-14)
    # the quadrature side is exactly zero there, so both sides agree only to O(h^2)
    assert abs(expected) <= 1e-4


@pytest.mark.parametrize("b", [1.0, 1.5])
def test_K0_nonnegative(b):
    # at b = 1 the minimum of K_0 tends to 0; the grid error decays like h^3
    opt = optimize_alpha(0.0, 0.0, b, n_points=4096)
    cur = costfn.cost_K0(opt)
    assert cur.min_K_global >= -1e-8
    assert abs(cur.K[-1]) <= 1e-8


def test_K0_critical_points_follow_closed_form(flat_opt):
    cur = costfn.cost_K0(flat_opt)
    for c in cur.checks["critical_points"]:
        assert c["gap"] <= 1e-5


def test_K0_requires_flat_profile(curved_opt):
    with pytest.raises(costfn.PreconditionError):
        costfn.cost_K0(curved_opt)


def test_Kk_certificate_and_constants(curved_opt):
    cur = costfn.cost_Kk(curved_opt, 0.0)
    assert cur.min_K_certified >= -1e-8
    assert cur.beta_eps >= 0
    logeps = abs(math.log(0.05))
    assert cur.t_bar >= cur.t[-1] - 2.0 * math.log(logeps)
    assert cur.beta_eps <= 1e3 * logeps**2 * curved_opt.profile.f[-1] ** 2
    auto = costfn.cost_Kk(curved_opt, "auto", strict=False)
    assert 0 < auto.d_eps <= logeps**-4


def test_Kk_rejects_flat(flat_opt):
    with pytest.raises(costfn.PreconditionError):
        costfn.cost_Kk(flat_opt)


def test_certificate_error_carries_location(flat_opt):
    # a wrong phase makes F strongly negative where f is still large
    wrong = OptimalProfile(-3.0, flat_opt.profile, 0.0)
    with pytest.raises(costfn.CertificateError) as info:
        costfn.cost_K0(wrong)
    assert info.value.value < 0
    assert 0 < info.value.t_bad <= flat_opt.profile.t[-1]


@settings(max_examples=8, deadline=None)
@given(st.floats(1.05, 1.68))
def test_K0_positivity_property(b):
    opt = optimize_alpha(0.0, 0.0, b, n_points=2048)
    assert costfn.cost_K0(opt, strict=False).min_K_global >= -1e-8
