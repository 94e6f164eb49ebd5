"""Parameter sweeps, scaling fits and machine-readable verdicts.

Each check produces a ``Verdict`` with its fitted constants, the exponent
it was tested against and the CSV tables it was computed from.  Cells
(one parameter combination each) fail independently: an exception is
recorded in the cell and marks the verdict failed, the sweep carries on.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import costfn, gl2d, layer, oracles, spectral
from .profile1d import (
    THETA0,
    ProfileParams,
    TrivialRegime,
    energy_identity,
    minimize_profile,
    optimize_alpha,
)

log = logging.getLogger(__name__)

PASS, FAIL, REPORT = "pass", "fail", "report-only"
THEOREMS = (
    "theta0", "oscillator-anchor", "trivial-regime", "oracle-equivalence", "identities",
    "K0-positivity", "Kk-positivity", "disc-energy", "l2-density", "pan-linf",
    "pan-boundary", "winding", "vorticity-bound", "agmon",
)


class FitError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def fit_scaling(samples, q: float = 0.0):
    """Least squares of log(value) = log C + p log(eps) + q log|log eps| with q fixed.

    Returns (p_hat, C_hat, residual) where C_hat is the envelope constant
    max value / (eps^p_hat |log eps|^q) and residual the RMS log misfit.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise FitError("need at least three samples")
    eps = np.array([s[0] for s in samples], float)
    val = np.array([s[1] for s in samples], float)
    if np.any(val <= 0) or np.any(eps <= 0) or np.any(eps >= 1):
        raise FitError("samples must have 0 < eps < 1 and positive values")
    if np.unique(eps).size < 2:
        raise FitError("need at least two distinct eps values")
    y = np.log(val) - q * np.log(np.abs(np.log(eps)))
    A = np.vstack([np.log(eps), np.ones_like(eps)]).T
    (p_hat, c_log), *_ = np.linalg.lstsq(A, y, rcond=None)
    misfit = y - A @ np.array([p_hat, c_log])
    envelope = float(np.max(val / (eps**p_hat * np.abs(np.log(eps)) ** q)))
    return float(p_hat), envelope, float(np.sqrt(np.mean(misfit**2)))


@dataclass
class SweepConfig:
    eps_list: tuple = (0.12, 0.08, 0.05)
    b_list: tuple = (1.5,)
    R: float = 1.0
    k0_b_list: tuple = (1.0, 1.2, 1.4, 1.6, 1.69)
    cost_eps_list: tuple = (0.1, 0.05)
    cost_b_list: tuple = (1.2, 1.5)
    n_points: int = 2048
    k0_n_points: int = 4096
    winding_eps: float = 0.08
    pan_eps: float = 0.05
    seed: int = 0
    out_dir: str = "sweep_out"
    only: tuple | None = None

    def __post_init__(self):
        for name in ("eps_list", "b_list", "k0_b_list", "cost_eps_list", "cost_b_list"):
            setattr(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.only is not None:
            unknown = set(self.only) - set(THEOREMS)
            if unknown:
                raise ConfigError(f"unknown checks: {sorted(unknown)}")
            self.only = tuple(self.only)
        for e in self.eps_list + self.cost_eps_list:
            if not 0 < e < 1:
                raise ConfigError(f"eps = {e} outside (0, 1)")
        for b in self.b_list + self.k0_b_list + self.cost_b_list:
            if b <= 0:
                raise ConfigError(f"b = {b} must be positive")
        if self.R <= 0:
            raise ConfigError("R must be positive")
        for e in self.eps_list:
            c0 = gl2d.effective_c0(e, self.R)
            if e * c0 * abs(math.log(e)) / self.R >= 1:
                raise ConfigError(f"eps = {e}: boundary layer reaches the centre")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        data = dict(data)
        # a config naming only b_list applies it to every b-indexed check
        if "b_list" in data:
            data.setdefault("k0_b_list", data["b_list"])
            data.setdefault("cost_b_list", data["b_list"])
        return cls(**data)

    def enabled(self, theorem: str) -> bool:
        return self.only is None or theorem in self.only


@dataclass
class Verdict:
    theorem: str
    status: str
    constants: dict = field(default_factory=dict)
    exponent: float | None = None
    target: float | None = None
    artifacts: list = field(default_factory=list)
    cells: list = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        return cls(**data)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_verdicts(verdicts) -> str:
    rows = sorted((v.to_dict() for v in verdicts), key=lambda d: d["theorem"])
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def parse_verdicts(text: str) -> list:
    return [Verdict.from_dict(d) for d in json.loads(text)]


def _write_csv(out_dir, name, header, rows):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return name


def _cell(fn, **params):
    try:
        out = fn(**params)
        return {**params, **out}
    except Exception as exc:  # a failing cell never aborts the sweep
        log.warning("cell %s failed: %s", params, exc)
        return {**params, "error": f"{type(exc).__name__}: {exc}"}


def _in_regime(b):
    return 1.0 < b < 1.0 / THETA0


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


# ----------------------------------------------------------------------------
# one-dimensional checks


def _check_theta0(cfg):
    coarse = spectral.find_theta0(spectral.Theta0Config(n_points=4097))
    fine = spectral.find_theta0(spectral.Theta0Config(n_points=8193))
    shift = abs(fine[0] - coarse[0])
    err = abs(1 / fine[0] - 1.6946)
    art = _write_csv(cfg.out_dir, "theta0.csv", ["n_points", "theta0", "alpha0"],
                     [(4097, coarse[0], coarse[1]), (8193, fine[0], fine[1])])
    return Verdict("theta0", _status(err <= 1e-3 and shift < 1e-6),
                   {"theta0": fine[0], "inverse": 1 / fine[0], "alpha0": fine[1],
                    "refinement_shift": shift}, artifacts=[art])


def _check_anchor(cfg):
    mu0 = spectral.mu_osc(spectral.OscillatorSpec(0.0)).mu
    theta0, alpha0 = spectral.find_theta0()
    gap = abs(alpha0 + math.sqrt(theta0))
    art = _write_csv(cfg.out_dir, "oscillator_anchor.csv", ["quantity", "value"],
                     [("mu_osc_0", mu0), ("alpha0", alpha0), ("sqrt_theta0", math.sqrt(theta0))])
    return Verdict("oscillator-anchor", _status(abs(mu0 - 1) <= 1e-6 and gap <= 1e-5),
                   {"mu_osc_0": mu0, "alpha0_gap": gap}, artifacts=[art])


def _check_trivial(cfg):
    rng = np.random.default_rng(cfg.seed)
    cells = []
    for _ in range(10):
        k = float(rng.choice([0.0, 0.5, 1.0]))
        eps = float(rng.uniform(0.02, 0.1)) if k > 0 else 0.0
        alpha = float(rng.uniform(-2.0, 0.5))

        def run(k, eps, alpha):
            prof = minimize_profile(ProfileParams(k, alpha, eps, 2.0, n_points=1024))
            return {"max_f": float(np.max(np.abs(prof.f))), "energy": prof.energy}

        cells.append(_cell(run, k=k, eps=eps, alpha=alpha))
    ok = all("error" not in c and c["max_f"] == 0 and c["energy"] == 0 for c in cells)
    art = _write_csv(cfg.out_dir, "trivial_regime.csv", ["k", "eps", "alpha", "max_f", "energy"],
                     [(c["k"], c["eps"], c["alpha"], c.get("max_f", "nan"), c.get("energy", "nan"))
                      for c in cells])
    return Verdict("trivial-regime", _status(ok), artifacts=[art], cells=cells)


def _check_oracle(cfg):
    n = 2 * cfg.n_points + 1
    cells = []
    for k in (0.0, 1.0):
        for b in cfg.cost_b_list:
            def run(k, b):
                if not _in_regime(b):
                    raise TrivialRegime(f"b = {b} outside the regime")
                eps = 0.05 if k > 0 else 0.0
                opt = optimize_alpha(k, eps, b, n_points=cfg.n_points)
                p = ProfileParams(k, opt.alpha_k, eps, b, n_points=n)
                prof = minimize_profile(p)
                f, e = oracles.projected_profile_oracle(k, opt.alpha_k, eps, b, p.length, n,
                                                        seed=cfg.seed)
                return {"df_inf": float(np.max(np.abs(f - prof.f))),
                        "dE": abs(e - prof.energy)}

            cells.append(_cell(run, k=k, b=b))
    ok = all("error" not in c and c["df_inf"] <= 1e-6 and c["dE"] <= 1e-8 for c in cells)
    trivial = all("TrivialRegime" in c.get("error", "") for c in cells)
    art = _write_csv(cfg.out_dir, "oracle.csv", ["k", "b", "df_inf", "dE"],
                     [(c["k"], c["b"], c.get("df_inf", "nan"), c.get("dE", "nan")) for c in cells])
    worst = {key: max((c[key] for c in cells if key in c), default=0.0) for key in ("df_inf", "dE")}
    return Verdict("oracle-equivalence", REPORT if trivial else _status(ok), worst,
                   artifacts=[art], cells=cells, message="trivial regime" if trivial else "")


def _identity_cell(k, eps, b, n_points, seed):
    if not _in_regime(b):
        raise TrivialRegime(f"b = {b}: trivial regime, identities are vacuous")
    opt = optimize_alpha(k, eps, b, n_points=n_points)
    lhs, rhs = energy_identity(opt.profile)
    F = costfn.potential_F(opt)
    scale = float(np.max(np.abs(F)))
    out = {"energy_identity": abs(lhs - rhs) / abs(lhs),
           "fh_residual": abs(opt.fh_residual) / scale,
           "F_endpoints": max(abs(F[0]), abs(F[-1])) / scale}
    if k == 0:
        out["F0_closed_form"] = costfn.F0_closed_form_extrapolated(b, n_points)
    else:
        perimeter = 2 * math.pi / k
        delta = layer.admissible_delta(opt.alpha_k, eps, perimeter, near=0.3)
        base = layer.plane_wave_field(opt, 32, delta, perimeter=perimeter)
        rng = np.random.default_rng(seed)
        s = base.s[:, None] / base.length_s
        bump = sum((rng.normal() + 1j * rng.normal()) * np.exp(2j * math.pi * m * s)
                   for m in range(-2, 3))
        psi = base.psi * (1 + 0.1 * bump * np.exp(-base.t[None, :]))
        fld = layer.LayerField(psi, k, eps, b, delta, base.c0, perimeter)
        sp = layer.split_energy(fld, opt)
        out["split_identity"] = abs(sp.main + sp.reduced - sp.total) / abs(sp.total)
    return out


def _check_identities(cfg):
    cells = []
    for b in cfg.b_list:
        cells.append(_cell(_identity_cell, k=0.0, eps=0.0, b=b, n_points=cfg.n_points,
                           seed=cfg.seed))
        for e in cfg.cost_eps_list:
            cells.append(_cell(_identity_cell, k=1.0, eps=e, b=b, n_points=cfg.n_points,
                               seed=cfg.seed))
    return _identity_verdict(cfg, cells)


def _identity_verdict(cfg, cells):
    keys = ("energy_identity", "fh_residual", "F_endpoints", "F0_closed_form", "split_identity")
    trivial = all("TrivialRegime" in c.get("error", "") for c in cells)
    worst = {key: max((c[key] for c in cells if key in c), default=0.0) for key in keys}
    ok = all("error" not in c for c in cells) and all(v <= 1e-8 for v in worst.values())
    art = _write_csv(cfg.out_dir, "identities.csv", ["k", "eps", "b", *keys, "error"],
                     [(c["k"], c["eps"], c["b"], *(c.get(k, "") for k in keys), c.get("error", ""))
                      for c in cells])
    if trivial:
        return Verdict("identities", REPORT, artifacts=[art], cells=cells,
                       message="trivial regime: f = 0")
    return Verdict("identities", _status(ok), worst, artifacts=[art], cells=cells)


def _check_K0(cfg):
    cells = []
    for b in cfg.k0_b_list:
        def run(b):
            if b >= 1 / THETA0:
                raise TrivialRegime(f"b = {b}: trivial regime")
            window = None
            if b < 1.0:
                window = spectral.alpha_window(b, 0.0, 0.0, n_points=cfg.k0_n_points,
                                               open_left=True)
            opt = optimize_alpha(0.0, 0.0, b, n_points=cfg.k0_n_points, window=window)
            cur = costfn.cost_K0(opt, strict=False)
            return {"min_K0": cur.min_K_global, "report_only": cur.checks["report_only"]}

        cells.append(_cell(run, b=b))
    asserted = [c for c in cells if not c.get("report_only", False)]
    trivial = all("TrivialRegime" in c.get("error", "") for c in cells)
    ok = all("error" not in c and c["min_K0"] >= costfn.POSITIVITY_TOL for c in asserted)
    art = _write_csv(cfg.out_dir, "cost_K0.csv", ["b", "min_K0", "error"],
                     [(c["b"], c.get("min_K0", ""), c.get("error", "")) for c in cells])
    status = REPORT if trivial else _status(ok)
    return Verdict("K0-positivity", status,
                   {"min_K0": min((c["min_K0"] for c in asserted if "min_K0" in c), default=0.0)},
                   artifacts=[art], cells=cells, message="trivial regime" if trivial else "")


def _check_Kk(cfg):
    cells = []
    for b in cfg.cost_b_list:
        for e in cfg.cost_eps_list:
            for d in (0.0, "auto"):
                def run(b, eps, d_eps):
                    opt = optimize_alpha(1.0, eps, b, n_points=cfg.n_points)
                    cur = costfn.cost_Kk(opt, d_eps=d_eps, strict=False)
                    return {"d_value": cur.d_eps, "min_K_certified": cur.min_K_certified,
                            "t_bar": cur.t_bar, "beta_eps": cur.beta_eps,
                            "intermediate_ok": cur.checks["intermediate_ok"]}

                cells.append(_cell(run, b=b, eps=e, d_eps=d))
    trivial = all("Trivial" in c.get("error", "") for c in cells)
    ok = all("error" not in c and c["min_K_certified"] >= costfn.POSITIVITY_TOL for c in cells)
    art = _write_csv(cfg.out_dir, "cost_Kk.csv",
                     ["b", "eps", "d_eps", "min_K_certified", "t_bar", "beta_eps", "error"],
                     [(c["b"], c["eps"], c.get("d_value", c["d_eps"]), c.get("min_K_certified", ""),
                       c.get("t_bar", ""), c.get("beta_eps", ""), c.get("error", ""))
                      for c in cells])
    return Verdict("Kk-positivity", REPORT if trivial else _status(ok),
                   {"min_K_certified": min((c["min_K_certified"] for c in cells
                                            if "min_K_certified" in c), default=0.0)},
                   artifacts=[art], cells=cells, message="trivial regime" if trivial else "")


# ----------------------------------------------------------------------------
# disc sweep


def _disc_cell(eps, b, R, seed):
    grid = gl2d.make_disc_grid(R, eps)
    opt = gl2d.profile_for_grid(grid, b)
    trial = gl2d.build_trial(eps, b, R, grid, opt)
    fld = gl2d.minimize_gl(eps, b, R, grid, seed=seed, opt=opt)
    other = gl2d.minimize_gl(eps, b, R, grid, seed=seed + 1, opt=opt)
    main = 2 * math.pi * R * opt.energy / eps
    dens = gl2d.density_checks(fld, opt)
    w_outer = gl2d.winding_number(fld, R)
    w_inner = gl2d.winding_number(fld, R - eps / 2)
    agmon = gl2d.agmon_decay_fit(fld)
    red = layer.compute_current_vorticity(gl2d.extract_layer_field(fld, opt), opt)
    return {
        "energy": fld.energy, "trial_energy": trial.energy, "main": main,
        "e1d_k": opt.energy, "alpha_k": opt.alpha_k,
        "gap": abs(fld.energy - main), "signed_gap": fld.energy - main,
        "seed_spread": abs(fld.energy - other.energy), "grad_norm": fld.grad_norm,
        "max_modulus": fld.max_modulus,
        "l2": dens["l2"], "linf_layer": dens["linf_layer"],
        "linf_boundary": dens["linf_boundary"], "gamma_eps": dens["gamma_eps"],
        "degree": w_outer.degree, "degree_inner": w_inner.degree,
        "degree_predicted": w_outer.predicted, "degree_physical": w_outer.physical_estimate,
        "decay_rate": agmon["rate"], "decay_quality": agmon["quality"],
        "vorticity_excess": red.checks["max_bound_excess"],
        "n_r": grid.n_r, "n_theta": grid.n_theta,
    }


DISC_COLUMNS = ("eps", "b", "energy", "trial_energy", "main", "e1d_k", "alpha_k", "gap",
                "signed_gap", "seed_spread", "grad_norm", "max_modulus", "l2", "linf_layer",
                "linf_boundary", "gamma_eps", "degree", "degree_inner", "degree_predicted",
                "degree_physical", "decay_rate", "decay_quality", "vorticity_excess",
                "n_r", "n_theta", "error")


def _disc_sweep(cfg):
    cells = []
    for b in cfg.b_list:
        if not _in_regime(b):
            continue
        for e in sorted(cfg.eps_list, reverse=True):
            cells.append(_cell(_disc_cell, eps=e, b=b, R=cfg.R, seed=cfg.seed))
    art = _write_csv(cfg.out_dir, "disc_sweep.csv", DISC_COLUMNS,
                     [tuple(c.get(k, "") for k in DISC_COLUMNS) for c in cells])
    return cells, art


def _good(cells):
    return [c for c in cells if "error" not in c]


def _disc_verdicts(cfg, cells, art):
    out = []
    skipped = not cells
    if skipped:
        msg = "no b in the surface regime: 2D checks skipped"
        for th in ("disc-energy", "l2-density", "pan-linf", "pan-boundary", "winding", "agmon"):
            if cfg.enabled(th):
                out.append(Verdict(th, REPORT, artifacts=[art], message=msg))
        return out
    good = _good(cells)
    failed = len(good) < len(cells)

    if cfg.enabled("disc-energy"):
        v = Verdict("disc-energy", FAIL, target=1.0, artifacts=[art], cells=cells)
        if len(good) >= 3:
            samples = [(c["eps"], c["gap"]) for c in good]
            p, C, res = fit_scaling(samples, q=1.0)
            ratios = [c["gap"] / (c["eps"] * abs(math.log(c["eps"]))) for c in good]
            order = sorted(good, key=lambda c: -c["eps"])
            decreasing = all(a["gap"] > b_["gap"] for a, b_ in zip(order, order[1:]))
            sandwich = all(c["trial_energy"] >= c["energy"] for c in good)
            seeds = all(c["seed_spread"] <= 1e-7 for c in good)
            converged = all(c["grad_norm"] <= gl2d.GRAD_TOL for c in good)
            v.exponent = p
            v.constants = {"C_fit": max(ratios), "C_envelope": C, "fit_residual": res,
                           "gap_decreasing": decreasing, "trial_above_min": sandwich,
                           "seeds_agree": seeds}
            ok = sandwich and decreasing and seeds and converged and not failed
            v.status = _status(ok)
        out.append(v)

    if cfg.enabled("l2-density"):
        v = Verdict("l2-density", FAIL, target=1.5, artifacts=[art], cells=cells)
        if len(good) >= 3:
            p, C, res = fit_scaling([(c["eps"], c["l2"]) for c in good], q=0.5)
            v.exponent, v.constants = p, {"C_envelope": C, "fit_residual": res}
            v.status = _status(p >= 1.4 and not failed)
        out.append(v)

    if cfg.enabled("pan-linf"):
        at = [c for c in good if math.isclose(c["eps"], cfg.pan_eps)]
        v = Verdict("pan-linf", FAIL, artifacts=[art], cells=cells)
        if at:
            worst = max(c["linf_layer"] for c in at)
            v.constants = {"sup_error": worst, "gamma_eps": at[0]["gamma_eps"]}
            v.status = _status(worst < 0.1)
        else:
            v.message = f"eps = {cfg.pan_eps} not in the sweep"
        out.append(v)

    if cfg.enabled("pan-boundary"):
        v = Verdict("pan-boundary", REPORT, target=0.25, artifacts=[art], cells=cells)
        if len(good) >= 3:
            p, C, res = fit_scaling([(c["eps"], c["linf_boundary"]) for c in good], q=2.0)
            v.exponent, v.constants = p, {"C_envelope": C, "fit_residual": res,
                                          "exponent_at_least_0.2": p >= 0.2}
        out.append(v)

    if cfg.enabled("winding"):
        at = [c for c in good if math.isclose(c["eps"], cfg.winding_eps)]
        v = Verdict("winding", FAIL, target=-0.75, artifacts=[art], cells=cells)
        if at:
            c = at[0]
            bound = 3 * c["eps"] ** -0.75 * abs(math.log(c["eps"])) ** 2
            gap = abs(c["degree"] - c["degree_predicted"])
            stable = c["degree"] == c["degree_inner"]
            v.constants = {"degree": c["degree"], "predicted": c["degree_predicted"],
                           "gap": gap, "bound": bound, "contours_agree": stable,
                           "physical_estimate": c["degree_physical"]}
            v.status = _status(gap <= bound and stable)
        else:
            v.message = f"eps = {cfg.winding_eps} not in the sweep"
        out.append(v)

    if cfg.enabled("agmon"):
        v = Verdict("agmon", REPORT, artifacts=[art], cells=cells)
        v.constants = {"min_rate": min((c["decay_rate"] for c in good), default=0.0),
                       "min_quality": min((c["decay_quality"] for c in good), default=0.0)}
        out.append(v)
    return out


def _synthetic_vorticity(seed):
    rng = np.random.default_rng(seed)
    rows = []
    v, s, t = oracles.synthetic_vortex(128, 96, 20.0, 6.0)
    h_s, h_t = s[1] - s[0], t[1] - t[0]
    mu, g2 = layer.plaquette_vorticity(v, h_s, h_t, wrap=1.0)
    i0, i1, j0, j1 = 32, 96, 16, 80
    loop = np.concatenate([v[i0:i1, j0], v[i1, j0:j1], v[i1:i0:-1, j1], v[i0, j1:j0:-1]])
    circ = layer.loop_circulation(loop / np.abs(loop))
    rows.append(("vortex", float(np.max(np.abs(mu) - g2)), circ))
    for n in range(9):
        ss = np.linspace(0, 2 * math.pi, 64, endpoint=False)[:, None]
        tt = np.linspace(0, 1, 48)[None, :]
        field_ = sum((rng.normal() + 1j * rng.normal()) * np.exp(1j * m * ss) * np.cos(l * math.pi * tt)
                     for m in range(-3, 4) for l in range(3))
        mu, g2 = layer.plaquette_vorticity(field_, ss[1, 0] - ss[0, 0], tt[0, 1] - tt[0, 0], wrap=1.0)
        rows.append((f"random-{n}", float(np.max(np.abs(mu) - g2)), float("nan")))
    return rows


def _check_vorticity(cfg, disc_cells, disc_art):
    rows = _synthetic_vorticity(cfg.seed)
    art = _write_csv(cfg.out_dir, "vorticity_synthetic.csv", ["field", "max_excess", "circulation"],
                     rows)
    excess = max(r[1] for r in rows)
    circ = rows[0][2]
    extracted = [c["vorticity_excess"] for c in _good(disc_cells)]
    if extracted:
        excess = max(excess, max(extracted))
    circ_err = abs(circ - 2 * math.pi) / (2 * math.pi)
    ok = excess <= 1e-10 and circ_err <= 0.01 and len(_good(disc_cells)) == len(disc_cells)
    arts = [art] + ([disc_art] if disc_cells else [])
    return Verdict("vorticity-bound", _status(ok),
                   {"max_excess": excess, "vortex_circulation": circ,
                    "circulation_rel_err": circ_err, "extracted_fields": len(extracted)},
                   artifacts=arts)


def run_sweep(cfg: SweepConfig | None = None) -> list:
    """Run every enabled check; returns the verdicts sorted by theorem id."""
    cfg = cfg or SweepConfig()
    os.makedirs(cfg.out_dir, exist_ok=True)
    verdicts = []
    simple = {
        "theta0": _check_theta0, "oscillator-anchor": _check_anchor,
        "trivial-regime": _check_trivial, "oracle-equivalence": _check_oracle,
        "identities": _check_identities, "K0-positivity": _check_K0,
        "Kk-positivity": _check_Kk,
    }
    for th, fn in simple.items():
        if cfg.enabled(th):
            try:
                verdicts.append(fn(cfg))
            except Exception as exc:
                verdicts.append(Verdict(th, FAIL, message=f"{type(exc).__name__}: {exc}"))
    disc_ids = ("disc-energy", "l2-density", "pan-linf", "pan-boundary", "winding", "agmon",
                "vorticity-bound")
    if any(cfg.enabled(t) for t in disc_ids):
        cells, art = _disc_sweep(cfg)
        verdicts.extend(_disc_verdicts(cfg, cells, art))
        if cfg.enabled("vorticity-bound"):
            verdicts.append(_check_vorticity(cfg, cells, art))
    verdicts.sort(key=lambda v: v.theorem)
    with open(os.path.join(cfg.out_dir, "verdicts.json"), "w") as fh:
        fh.write(emit_verdicts(verdicts))
    return verdicts


def all_pass(verdicts) -> bool:
    return all(v.status != FAIL for v in verdicts)
