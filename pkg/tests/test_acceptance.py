"""One test per acceptance criterion, each at its stated tolerance and runtime budget.

A line "criterion N: PASS|FAIL ..." is recorded for every criterion and
printed in the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from glsurface import costfn, gl2d, layer, oracles, report, spectral
from glsurface.profile1d import (
    ProfileParams,
    energy_identity,
    minimize_profile,
    optimize_alpha,
)


def _record(log, n, ok, detail):
    log.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_01_theta0(acceptance_log):
    start = time.perf_counter()
    coarse, _ = spectral.find_theta0(spectral.Theta0Config(n_points=4097))
    theta0, _ = spectral.find_theta0(spectral.Theta0Config(n_points=8193))
    elapsed = time.perf_counter() - start
    err = abs(1 / theta0 - 1.6946)
    shift = abs(theta0 - coarse)
    ok = err <= 1e-3 and shift < 1e-6 and elapsed < 1.0
    assert _record(acceptance_log, 1, ok,
                   f"1/theta0 = {1 / theta0:.6f} (|err| {err:.1e}), refinement shift {shift:.1e}, "
                   f"{elapsed:.2f} s")


def test_criterion_02_oscillator_anchor(acceptance_log):
    start = time.perf_counter()
    mu0 = spectral.mu_osc(spectral.OscillatorSpec(0.0)).mu
    theta0, alpha0 = spectral.find_theta0()
    elapsed = time.perf_counter() - start
    gap = abs(alpha0 + math.sqrt(theta0))
    ok = abs(mu0 - 1) <= 1e-6 and gap <= 1e-5 and elapsed < 1.0
    assert _record(acceptance_log, 2, ok,
                   f"mu_osc(0) - 1 = {mu0 - 1:.1e}, |alpha0 + sqrt(theta0)| = {gap:.1e}, "
                   f"{elapsed:.2f} s")


def test_criterion_03_trivial_regime(acceptance_log):
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    worst = 0.0
    energies = []
    for _ in range(10):
        k = float(rng.choice([0.0, 0.5, 1.0]))
        eps = float(rng.uniform(0.02, 0.1)) if k else 0.0
        alpha = float(rng.uniform(-2.0, 0.5))
        prof = minimize_profile(ProfileParams(k, alpha, eps, 2.0))
        worst = max(worst, float(np.max(np.abs(prof.f))))
        energies.append(prof.energy)
    elapsed = time.perf_counter() - start
    ok = worst == 0.0 and all(e == 0.0 for e in energies) and elapsed < 5.0
    assert _record(acceptance_log, 3, ok,
                   f"max |f| = {worst}, energies all zero: {all(e == 0 for e in energies)}, "
                   f"{elapsed:.2f} s")


def test_criterion_04_oracle_equivalence(acceptance_log):
    n_base = 2048
    n = 2 * n_base + 1
    start = time.perf_counter()
    df_worst = de_worst = 0.0
    for k in (0.0, 1.0):
        for b in (1.2, 1.5):
            eps = 0.05 if k else 0.0
            opt = optimize_alpha(k, eps, b, n_points=n_base)
            p = ProfileParams(k, opt.alpha_k, eps, b, n_points=n)
            prof = minimize_profile(p)
            f, e = oracles.projected_profile_oracle(k, opt.alpha_k, eps, b, p.length, n,
                                                    restarts=3, seed=0)
            df_worst = max(df_worst, float(np.max(np.abs(f - prof.f))))
            de_worst = max(de_worst, abs(e - prof.energy))
    elapsed = time.perf_counter() - start
    ok = df_worst <= 1e-6 and de_worst <= 1e-8 and elapsed < 30.0
    assert _record(acceptance_log, 4, ok,
                   f"max |df| = {df_worst:.1e}, max |dE| = {de_worst:.1e}, {elapsed:.1f} s")


def _identity_case(rng):
    k = float(rng.choice([0.0, 1.0]))
    eps = float(rng.uniform(0.03, 0.1)) if k else 0.0
    b = float(rng.uniform(1.1, 1.65))
    opt = optimize_alpha(k, eps, b)
    lhs, rhs = energy_identity(opt.profile)
    F = costfn.potential_F(opt)
    scale = float(np.max(np.abs(F)))
    out = {"energy identity": abs(lhs - rhs) / abs(lhs),
           "alpha-derivative": abs(opt.fh_residual) / scale,
           "F endpoints": max(abs(F[0]), abs(F[-1])) / scale}
    if k == 0:
        out["F0 closed form"] = costfn.F0_closed_form_extrapolated(b)
    else:
        perimeter = 2 * math.pi
        delta = layer.admissible_delta(opt.alpha_k, eps, perimeter, near=float(rng.uniform(0, 1)))
        base = layer.plane_wave_field(opt, 64, delta, perimeter=perimeter)
        s = base.s[:, None] / base.length_s
        bump = sum((rng.normal() + 1j * rng.normal()) * np.exp(2j * math.pi * m * s)
                   for m in range(-3, 4))
        psi = base.psi * (1 + 0.2 * bump * np.exp(-base.t[None, :]))
        fld = layer.LayerField(psi, k, eps, b, delta, base.c0, perimeter)
        sp = layer.split_energy(fld, opt)
        out["splitting"] = abs(sp.main + sp.reduced - sp.total) / abs(sp.total)
    return out


def test_criterion_05_identities(acceptance_log):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    worst = {}
    for _ in range(20):
        for key, val in _identity_case(rng).items():
            worst[key] = max(worst.get(key, 0.0), val)
    elapsed = time.perf_counter() - start
    ok = all(v <= 1e-8 for v in worst.values()) and len(worst) == 5 and elapsed < 60.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items()))
    assert _record(acceptance_log, 5, ok, f"worst relative: {detail}; {elapsed:.1f} s")


def test_criterion_06_cost_certificates(acceptance_log):
    start = time.perf_counter()
    k0_min = math.inf
    for b in (1.0, 1.2, 1.4, 1.6, 1.69):
        opt = optimize_alpha(0.0, 0.0, b, n_points=4096)
        k0_min = min(k0_min, costfn.cost_K0(opt, strict=False).min_K_global)
    kk = {}
    for b in (1.2, 1.5):
        for eps in (0.1, 0.05):
            opt = optimize_alpha(1.0, eps, b)
            for d in (0.0, 0.5 * abs(math.log(eps)) ** -4):
                kk[(b, eps, d)] = costfn.cost_Kk(opt, d, strict=False).min_K_certified
    elapsed = time.perf_counter() - start
    kk_min_key = min(kk, key=kk.get)
    ok = k0_min >= -1e-8 and kk[kk_min_key] >= -1e-8 and elapsed < 60.0
    b, eps, d = kk_min_key
    assert _record(acceptance_log, 6, ok,
                   f"min K0 = {k0_min:.1e}; min K_k = {kk[kk_min_key]:.2e} at b = {b}, "
                   f"eps = {eps}, d = {d:.2e}; {elapsed:.1f} s")


@pytest.fixture(scope="module")
def disc_sweep(tmp_path_factory):
    cfg = report.SweepConfig(out_dir=str(tmp_path_factory.mktemp("sweep")))
    start = time.perf_counter()
    cells, _ = report._disc_sweep(cfg)
    return cells, time.perf_counter() - start


@pytest.mark.slow
def test_criterion_07_disc_energy(acceptance_log, disc_sweep):
    cells, elapsed = disc_sweep
    assert all("error" not in c for c in cells), cells
    cells = sorted(cells, key=lambda c: -c["eps"])
    sandwich = all(c["trial_energy"] >= c["energy"] >= c["main"] - c["gap"] for c in cells)
    p, C, _ = report.fit_scaling([(c["eps"], c["gap"]) for c in cells], q=1.0)
    ratios = [c["gap"] / (c["eps"] * abs(math.log(c["eps"]))) for c in cells]
    decreasing = all(a["gap"] > b["gap"] for a, b in zip(cells, cells[1:]))
    ok = sandwich and decreasing and elapsed < 1800
    gaps = ", ".join(f"{c['eps']}: {c['gap']:.5f}" for c in cells)
    assert _record(acceptance_log, 7, ok,
                   f"gaps {{{gaps}}}, gap/(eps|log eps|) <= {max(ratios):.3f}, fitted p = {p:.2f}, "
                   f"sandwich {sandwich}, strictly decreasing {decreasing}; {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_08_density(acceptance_log, disc_sweep):
    cells, _ = disc_sweep
    assert all("error" not in c for c in cells), cells
    p, C, _ = report.fit_scaling([(c["eps"], c["l2"]) for c in cells], q=0.5)
    at = [c for c in cells if math.isclose(c["eps"], 0.05)][0]
    pb, _, _ = report.fit_scaling([(c["eps"], c["linf_boundary"]) for c in cells], q=2.0)
    ok = p >= 1.4 and at["linf_layer"] < 0.1
    assert _record(acceptance_log, 8, ok,
                   f"L2 exponent {p:.2f} (C = {C:.2f}), sup error on A_bl at eps = 0.05: "
                   f"{at['linf_layer']:.4f}; boundary exponent {pb:.2f} (report-only)")


@pytest.mark.slow
def test_criterion_09_winding(acceptance_log, disc_sweep):
    cells, _ = disc_sweep
    c = [c for c in cells if math.isclose(c["eps"], 0.08)][0]
    eps = c["eps"]
    predicted = math.pi / eps**2 + abs(c["alpha_k"]) / eps
    bound = 3 * eps**-0.75 * abs(math.log(eps)) ** 2
    gap = abs(c["degree"] - predicted)
    same = c["degree"] == c["degree_inner"]
    ok = gap <= bound and same
    assert _record(acceptance_log, 9, ok,
                   f"degree {c['degree']} on both contours: {same}; predicted {predicted:.2f}, "
                   f"|gap| {gap:.1f} vs bound {bound:.1f}")


def test_criterion_10_vorticity(acceptance_log):
    start = time.perf_counter()
    rows = report._synthetic_vorticity(0)
    excess = max(r[1] for r in rows)
    circ = rows[0][2]
    for eps in (0.12, 0.08):
        grid = gl2d.make_disc_grid(1.0, eps)
        opt = gl2d.profile_for_grid(grid, 1.5)
        fld = gl2d.minimize_gl(eps, 1.5, 1.0, grid, opt=opt)
        red = layer.compute_current_vorticity(gl2d.extract_layer_field(fld, opt), opt)
        excess = max(excess, red.checks["max_bound_excess"])
    elapsed = time.perf_counter() - start
    circ_err = abs(circ - 2 * math.pi) / (2 * math.pi)
    ok = excess <= 1e-10 and circ_err <= 0.01 and len(rows) == 10 and elapsed < 60.0
    assert _record(acceptance_log, 10, ok,
                   f"max(|mu| - |grad v|^2) = {excess:.1e} over 10 synthetic + 2 extracted fields, "
                   f"vortex circulation error {circ_err:.1e}; {elapsed:.1f} s")
