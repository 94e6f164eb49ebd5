"""Command-line entry point: ``glsurface <subcommand>``."""

from __future__ import annotations

import csv
import json
import math
import sys

import click
import numpy as np

from . import costfn, gl2d, layer, report, spectral
from .profile1d import (
    ProfileParams,
    gradient_bound_check,
    minimize_profile,
    optimize_alpha,
    pointwise_bounds_check,
)


def _dump_json(data, path):
    text = json.dumps(report._clean(data), indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv_writer(path):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _close(fh):
    if fh is not sys.stdout:
        fh.close()


def _parse_scan(text):
    try:
        name, lo, hi, step = text.split(":")
        assert name == "alpha"
        lo, hi, step = float(lo), float(hi), float(step)
    except (ValueError, AssertionError):
        raise click.BadParameter("expected alpha:lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise click.BadParameter("need lo <= hi and step > 0")
    return np.arange(lo, hi + step / 2, step)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Surface superconductivity in discs: 1D profiles, cost functions and 2D checks."""
    import logging

    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("spectral")
@click.option("--alpha", type=float, default=0.0)
@click.option("--k", type=float, default=0.0)
@click.option("--eps", type=float, default=0.0)
@click.option("--c0", type=float, default=4.0)
@click.option("--grid-n", type=int, default=None, help="Number of grid nodes.")
@click.option("--scan", default=None, help="alpha:lo:hi:step")
@click.option("--find-theta0", is_flag=True, help="Print theta0 and its minimizer as JSON.")
@click.option("--out", default=None, help="CSV output path (default stdout).")
def spectral_cmd(alpha, k, eps, c0, grid_n, scan, find_theta0, out):
    """Ground-state energies of the half-line oscillator (k = eps = 0) or the curved operator."""
    if find_theta0:
        cfg = spectral.Theta0Config(n_points=grid_n or 8193)
        theta0, alpha0 = spectral.find_theta0(cfg)
        _dump_json({"theta0": theta0, "alpha0": alpha0}, out)
        return
    alphas = _parse_scan(scan) if scan else [alpha]
    fh, w = _csv_writer(out)
    w.writerow(["alpha", "k", "eps", "mu", "residual"])
    for a in alphas:
        if k == 0 and eps == 0:
            res = spectral.mu_osc(spectral.OscillatorSpec(float(a), n_points=grid_n or 8193))
        else:
            res = spectral.mu_eps(spectral.CurvedOperatorSpec(k, float(a), eps, c0,
                                                              grid_n or 2048))
        w.writerow([repr(float(a)), k, eps, repr(res.mu), repr(res.residual)])
    _close(fh)


def _profile_summary(prof, alpha_k, fh_residual, optimized, c0):
    p = prof.params
    out = {"k": p.k, "eps": p.eps, "b": p.b, "c0": c0, "n_points": p.n_points,
           "alpha_k": alpha_k, "energy": prof.energy, "fh_residual": fh_residual,
           "optimized": optimized, "trivial": prof.trivial}
    if not prof.trivial:
        out["pointwise_bounds"] = pointwise_bounds_check(prof)
        if p.eps > 0:
            out["gradient_bounds"] = gradient_bound_check(prof)
    return out


@main.command("profile")
@click.option("--k", type=float, default=0.0)
@click.option("--eps", type=float, default=0.0)
@click.option("--b", type=float, required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--optimize-alpha", "optimize", is_flag=True)
@click.option("--c0", type=float, default=4.0)
@click.option("--grid-n", type=int, default=2048)
@click.option("--out", default="profile.csv", show_default=True)
@click.option("--summary", default=None, help="JSON summary path (default: --out with .json).")
def profile_cmd(k, eps, b, alpha, optimize, c0, grid_n, out, summary):
    """Minimize the 1D profile functional at fixed or optimal alpha."""
    if (alpha is None) == (not optimize):
        raise click.UsageError("give exactly one of --alpha and --optimize-alpha")
    if optimize:
        opt = optimize_alpha(k, eps, b, c0, grid_n)
        prof, alpha_k, fh = opt.profile, opt.alpha_k, opt.fh_residual
    else:
        prof = minimize_profile(ProfileParams(k, alpha, eps, b, c0, grid_n))
        from .profile1d import fh_derivative

        alpha_k, fh = alpha, fh_derivative(prof)
    from .profile1d import derivative, el_residual

    grid = prof.grid()
    v = prof.potential()
    res = el_residual(grid, prof.f, v, b)
    fh_, w = _csv_writer(out)
    w.writerow(["t", "f", "f_prime", "V", "residual"])
    for row in zip(prof.t, prof.f, derivative(prof), v, res):
        w.writerow([repr(float(x)) for x in row])
    _close(fh_)
    if summary is None and out not in (None, "-"):
        summary = out.rsplit(".", 1)[0] + ".json"
    _dump_json(_profile_summary(prof, alpha_k, fh, optimize, c0), summary)


def _load_optimal(path):
    with open(path) as fh:
        meta = json.load(fh)
    if not meta.get("optimized", False):
        raise click.UsageError("the profile summary must come from --optimize-alpha")
    opt = optimize_alpha(meta["k"], meta["eps"], meta["b"], meta.get("c0", 4.0),
                         meta["n_points"])
    if not math.isclose(opt.alpha_k, meta["alpha_k"], rel_tol=0, abs_tol=1e-9):
        raise click.ClickException("re-solved alpha_k differs from the stored value")
    return opt, meta


@main.command("cost")
@click.option("--from-profile", "profile_json", required=True)
@click.option("--d-eps", default="0", help="'auto' or a number.")
@click.option("--out", default="cost.csv", show_default=True)
@click.option("--summary", default=None)
def cost_cmd(profile_json, d_eps, out, summary):
    """Cost function K (K_0 for k = 0) on the profile grid."""
    opt, meta = _load_optimal(profile_json)
    if meta["k"] == 0:
        cur = costfn.cost_K0(opt, strict=False)
    else:
        cur = costfn.cost_Kk(opt, "auto" if d_eps == "auto" else float(d_eps), strict=False)
    fh, w = _csv_writer(out)
    w.writerow(["t", "f", "F", "K", "in_certified_region"])
    for row in zip(cur.t, opt.profile.f, cur.F, cur.K, cur.certified):
        w.writerow([repr(float(x)) for x in row[:4]] + [int(row[4])])
    _close(fh)
    if summary is None and out not in (None, "-"):
        summary = out.rsplit(".", 1)[0] + ".json"
    _dump_json({"t_bar": cur.t_bar, "beta_eps": cur.beta_eps, "d_eps": cur.d_eps,
                "min_K_certified": cur.min_K_certified, "min_K_global": cur.min_K_global,
                "checks": cur.checks}, summary)


@main.command("layer")
@click.option("--field", "field_path", required=True)
@click.option("--profile", "profile_json", required=True)
@click.option("--variant", type=click.Choice(layer.VARIANTS), default="disc")
@click.option("--d-eps", type=float, default=0.0)
@click.option("--out", default="split.json", show_default=True)
def layer_cmd(field_path, profile_json, variant, d_eps, out):
    """Energy splitting and lower-bound chain for a stored boundary-layer field."""
    opt, meta = _load_optimal(profile_json)
    fld = layer.read_field_bin(field_path, c0=meta.get("c0", 4.0))
    sp = layer.split_energy(fld, opt, variant)
    red = layer.compute_current_vorticity(fld, opt, variant)
    terms = layer.reduced_terms(red, d_eps=d_eps, strict=False) if variant == "disc" else None
    data = {"main": sp.main, "reduced": sp.reduced, "total": sp.total,
            "split_residual": sp.main + sp.reduced - sp.total, "variant": variant,
            "vorticity": red.checks}
    if terms is not None:
        data.update({"kinetic": terms.kinetic, "momentum": terms.momentum,
                     "quartic": terms.quartic, "chain_bound": terms.chain_bound,
                     "certified_bound": terms.certified_bound})
    _dump_json(data, out)


def _parse_grid(text):
    if text is None:
        return None, None
    try:
        nr, nth = (int(x) for x in text.split(":"))
    except ValueError:
        raise click.BadParameter("expected nr:ntheta") from None
    return nr, nth


@main.command("gl2d")
@click.option("--eps", type=float, required=True)
@click.option("--b", type=float, required=True)
@click.option("--R", "R", type=float, default=1.0)
@click.option("--mode", type=click.Choice(["fixed", "coupled"]), default="fixed")
@click.option("--grid", "grid_spec", default=None, help="nr:ntheta (nr = layer rings).")
@click.option("--seed", type=int, default=0)
@click.option("--init", type=click.Choice(["trial", "random"]), default="trial")
@click.option("--out", default=None, help="Write the extracted layer field (field.bin).")
@click.option("--profile-out", default=None, help="Write the matching profile summary.")
@click.option("--report", "report_path", default="report.json", show_default=True)
def gl2d_cmd(eps, b, R, mode, grid_spec, seed, init, out, profile_out, report_path):
    """Minimize the GL energy on a disc and compare with the 1D prediction."""
    n_layer, n_theta = _parse_grid(grid_spec)
    grid = gl2d.make_disc_grid(R, eps, n_layer=n_layer, n_theta=n_theta)
    opt = gl2d.profile_for_grid(grid, b)
    fld = gl2d.minimize_gl(eps, b, R, grid, "fixed_A" if mode == "fixed" else "coupled",
                           seed=seed, init=init, opt=opt)
    dens = gl2d.density_checks(fld, opt)
    try:
        w = gl2d.winding_number(fld, R)
        degree, predicted = w.degree, w.predicted
    except gl2d.DegreeUndefined:
        degree, predicted = None, None
    rep = {"energy": fld.energy, "e1d_k": opt.energy, "alpha_k": opt.alpha_k,
           "energy_gap": gl2d.energy_gap(fld, opt), "l2_density_err": dens["l2"],
           "linf_boundary_err": dens["linf_boundary"], "degree": degree,
           "degree_predicted": predicted, "decay_rate": gl2d.agmon_decay_fit(fld)["rate"]}
    _dump_json(rep, report_path)
    if out:
        layer.write_field_bin(gl2d.extract_layer_field(fld, opt), out)
    if profile_out:
        _dump_json(_profile_summary(opt.profile, opt.alpha_k, opt.fh_residual, True, grid.c0),
                   profile_out)


@main.command("verify")
@click.option("--config", "config_path", default=None, help="Sweep config JSON.")
@click.option("--out", default="verdicts.json", show_default=True)
@click.option("--only", default=None, help="Comma-separated theorem ids.")
@click.option("--out-dir", default=None, help="Directory for CSV tables.")
def verify_cmd(config_path, out, only, out_dir):
    """Run the verification sweep; exit 0 iff no enabled check fails."""
    data = {}
    if config_path:
        with open(config_path) as fh:
            data = json.load(fh)
    if only:
        data["only"] = [s.strip() for s in only.split(",") if s.strip()]
    if out_dir:
        data["out_dir"] = out_dir
    try:
        cfg = report.SweepConfig.from_dict(data)
    except report.ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    verdicts = report.run_sweep(cfg)
    with open(out, "w") as fh:
        fh.write(report.emit_verdicts(verdicts))
    for v in verdicts:
        click.echo(f"{v.status:12s} {v.theorem}", err=True)
    sys.exit(0 if report.all_pass(verdicts) else 1)


if __name__ == "__main__":
    main()
