"""Command-line entry point: weight analysis, Carleson norms, identity checks,
sweeps, and the elliptic-measure experiments, all emitting JSON/CSV artifacts.

Config precedence: built-in defaults < --config JSON file < explicit CLI
flags.  ``--print-effective-config`` dumps the merged configuration as JSON
and exits without running.  Exit status: 0 on success, 2 when a result came
back flagged (tolerance or extrapolation trouble), 1 on usage/config errors.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys
from pathlib import Path

import click

from ainftylab import __version__
from ainftylab.errors import AinftylabError, ConfigError
from ainftylab.weights import WeightSpec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2


def _default_threads():
    try:
        return max(1, int(os.environ.get("AINFTYLAB_THREADS", "1")))
    except ValueError:
        return 1



def _json_default(obj):
    import numpy as _np

    if isinstance(obj, (_np.integer,)):
        return int(obj)
    if isinstance(obj, (_np.floating,)):
        return float(obj)
    if isinstance(obj, (_np.bool_,)):
        return bool(obj)
    if isinstance(obj, _np.ndarray):
        return obj.tolist()
    return str(obj)

def _cli_guard(fn):
    """Translate package errors into exit-1 click errors with the field name."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, AinftylabError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="JSON config file; explicit flags override it.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=".",
                      help="Directory for output artifacts.")(fn)
    fn = click.option("--tol", type=float, default=1e-8, show_default=True,
                      help="Generic quadrature tolerance knob.")(fn)
    fn = click.option("--samples", type=int, default=64, show_default=True,
                      help="Sampling-family size knob (centers per sweep).")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Worker threads (default: AINFTYLAB_THREADS or 1).")(fn)
    fn = click.option("--print-effective-config", is_flag=True, default=False,
                      help="Print the merged config as JSON and exit.")(fn)
    return fn


def _merge_config(ctx, params, command):
    """defaults < config file < explicit CLI flags; returns the merged dict."""
    merged = dict(params)
    path = params.get("config_path")
    if path:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config", "top level must be a JSON object")
        for key, val in file_cfg.items():
            if key not in merged:
                raise ConfigError(key, "unknown config field")
            src = ctx.get_parameter_source(key)
            if src is not None and src.name != "COMMANDLINE":
                merged[key] = val
    if merged.get("threads") is None:
        merged["threads"] = _default_threads()
    for field in ("tol",):
        if merged.get(field) is not None and merged[field] <= 0:
            raise ConfigError(field, "must be positive")
    merged["command"] = command
    return merged


def _maybe_print_config(cfg):
    if cfg.pop("print_effective_config", False):
        cfg.pop("config_path", None)
        click.echo(json.dumps(cfg, indent=2, sort_keys=True, default=str))
        sys.exit(EXIT_OK)


def _load_weight(spec_arg):
    if spec_arg is None:
        raise ConfigError("spec", "a weight spec is required")
    text = spec_arg
    if Path(spec_arg).exists():
        text = Path(spec_arg).read_text()
    try:
        return WeightSpec.from_json(text)
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError("spec", f"cannot parse weight spec: {exc}")


def _parse_floats(text, field):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(field, f"expected comma-separated floats, got {text!r}")


def _outpath(cfg, name):
    d = Path(cfg["out_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d / name


@click.group()
@click.version_option(__version__, prog_name="ainftylab")
def main():
    """Numerical laboratory for A-infinity weights and Carleson measures."""


# ---------------------------------------------------------------------------
# weight analyze
# ---------------------------------------------------------------------------

@main.group()
def weight():
    """Weight-level analyses."""


@weight.command("analyze")
@click.option("--spec", "spec_arg", required=True,
              help="Weight spec: JSON string or path to a JSON file.")
@click.option("--region", default="-2,2", show_default=True)
@click.option("--good-doubling-m", "m_good", type=float, default=10.0,
              show_default=True)
@_common
@click.pass_context
@_cli_guard
def weight_analyze(ctx, spec_arg, region, m_good, **params):
    """Doubling constant, M-good doubling, A-infinity, and Carleson norm."""
    from ainftylab.ainfty import ainfty_constant, shared_ball_family
    from ainftylab.carleson import CarlesonBox, carleson_norm
    from ainftylab.weights import doubling_constant, good_doubling_deficit

    cfg = _merge_config(ctx, dict(params, spec_arg=spec_arg, region=region,
                                  m_good=m_good), "weight analyze")
    _maybe_print_config(cfg)
    spec = _load_weight(cfg["spec_arg"])
    lo, hi = _parse_floats(cfg["region"], "region")
    samples = cfg["samples"]
    prof = doubling_constant(spec, region=(lo, hi), centers=samples + 1)
    good = good_doubling_deficit(spec, cfg["m_good"], region=(lo, hi))
    fam = shared_ball_family(region=(lo, hi))
    ainf = ainfty_constant(spec, fam)
    est = carleson_norm(spec, [CarlesonBox(b.center, b.radius) for b in fam],
                        threads=cfg["threads"])
    report = {
        "spec": json.loads(spec.to_json()),
        "doubling_constant": prof.doubling_constant,
        "modulus_samples": prof.modulus_samples,
        "good_doubling": {"M": good.M, "deficit": good.deficit,
                          "certified": good.certified},
        "ainfty": ainf.value,
        "carleson_norm": est.to_json_dict(),
    }
    path = _outpath(cfg, "weight_analyze.json")
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    click.echo(f"ainfty={ainf.value:.9g} carleson={est.value:.9g} -> {path}")
    sys.exit(EXIT_FLAGGED if est.flagged else EXIT_OK)


# ---------------------------------------------------------------------------
# carleson
# ---------------------------------------------------------------------------

@main.command("carleson")
@click.option("--spec", "spec_arg", required=True)
@click.option("--kernel", type=click.Choice(["gauss", "bump"]), default="gauss",
              show_default=True)
@click.option("--k-lo", type=int, default=-6, show_default=True)
@click.option("--k-hi", type=int, default=7, show_default=True)
@_common
@click.pass_context
@_cli_guard
def carleson_cmd(ctx, spec_arg, kernel, k_lo, k_hi, **params):
    """Carleson norm over the dyadic box family, with the witness box."""
    from ainftylab.carleson import carleson_norm, dyadic_box_family

    cfg = _merge_config(ctx, dict(params, spec_arg=spec_arg, kernel=kernel,
                                  k_lo=k_lo, k_hi=k_hi), "carleson")
    _maybe_print_config(cfg)
    spec = _load_weight(cfg["spec_arg"])
    fam = dyadic_box_family(k_lo=cfg["k_lo"], k_hi=cfg["k_hi"])
    est = carleson_norm(spec, fam, kernel=cfg["kernel"], threads=cfg["threads"])
    path = _outpath(cfg, "carleson.json")
    path.write_text(json.dumps(est.to_json_dict(), indent=2, sort_keys=True, default=_json_default))
    click.echo(f"carleson_norm={est.value:.9g} flagged={est.flagged} -> {path}")
    sys.exit(EXIT_FLAGGED if est.flagged else EXIT_OK)


# ---------------------------------------------------------------------------
# fkp check
# ---------------------------------------------------------------------------

@main.group()
def fkp():
    """Box-mass decomposition checks."""


@fkp.command("check")
@click.option("--spec", "spec_arg", required=True)
@click.option("--xgrid", default="0.5,1.25,2.0", show_default=True)
@click.option("--rgrid", default="0.25,0.625,1.0", show_default=True)
@_common
@click.pass_context
@_cli_guard
def fkp_check(ctx, spec_arg, xgrid, rgrid, **params):
    """Identity residuals on a grid of (x, r); CSV of one report per point."""
    from ainftylab.fkp import identity_residual

    cfg = _merge_config(ctx, dict(params, spec_arg=spec_arg, xgrid=xgrid,
                                  rgrid=rgrid), "fkp check")
    _maybe_print_config(cfg)
    spec = _load_weight(cfg["spec_arg"])
    xs = _parse_floats(cfg["xgrid"], "xgrid")
    rs = _parse_floats(cfg["rgrid"], "rgrid")
    rows = [identity_residual(spec, x, r) for x in xs for r in rs]
    path = _outpath(cfg, "fkp_check.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(("x", "r", "box_term", "interior_term", "flux_term",
                     "centered_term", "residual", "tolerance", "passed"))
        for rep in rows:
            wr.writerow([f"{rep.x:.12g}", f"{rep.r:.12g}", f"{rep.box_term:.12g}",
                         f"{rep.interior_term:.12g}", f"{rep.flux_term:.12g}",
                         f"{rep.centered_term:.12g}", f"{rep.residual:.12g}",
                         f"{rep.tolerance:.12g}", int(rep.passed)])
    bad = sum(1 for rep in rows if not rep.passed)
    click.echo(f"{len(rows) - bad}/{len(rows)} identity points passed -> {path}")
    sys.exit(EXIT_OK if bad == 0 else EXIT_FLAGGED)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@main.command("sweep")
@click.option("--family", type=click.Choice(["power", "plateau"]), default="power",
              show_default=True)
@click.option("--values", default="0.4,0.2,0.1,0.05", show_default=True)
@_common
@click.pass_context
@_cli_guard
def sweep_cmd(ctx, family, values, **params):
    """Carleson norm, A-infinity, and error-term rows over a weight family."""
    from ainftylab.ainfty import sweep, write_sweep_csv

    cfg = _merge_config(ctx, dict(params, family=family, values=values), "sweep")
    _maybe_print_config(cfg)
    ts = _parse_floats(cfg["values"], "values")
    if cfg["family"] == "power":
        specs = [(t, WeightSpec.power(t)) for t in ts]
    else:
        specs = [(t, WeightSpec.plateau(t)) for t in ts]
    rows = sweep(specs, threads=cfg["threads"])
    path = _outpath(cfg, "sweep.csv")
    write_sweep_csv(rows, path)
    ok = all(r.lwmuc_ok for r in rows)
    click.echo(f"{len(rows)} rows, lwmuc_ok={ok} -> {path}")
    sys.exit(EXIT_OK if ok else EXIT_FLAGGED)


# ---------------------------------------------------------------------------
# dkp
# ---------------------------------------------------------------------------

@main.group()
def dkp():
    """Elliptic-measure-at-infinity pipeline."""


@dkp.command("solve")
@click.option("--coef", "coef_arg", required=True,
              help="Coefficient field: JSON string/file or .npz dump.")
@_common
@click.pass_context
@_cli_guard
def dkp_solve(ctx, coef_arg, **params):
    """Solve for the Green function at infinity and the boundary density."""
    from ainftylab.elliptic import (CoefficientField, elliptic_measure_infinity,
                                    green_at_infinity)

    cfg = _merge_config(ctx, dict(params, coef_arg=coef_arg), "dkp solve")
    _maybe_print_config(cfg)
    arg = cfg["coef_arg"]
    try:
        if arg.endswith(".npz"):
            fld = CoefficientField.from_npz(arg)
        elif Path(arg).exists():
            fld = CoefficientField.from_json(Path(arg).read_text())
        else:
            fld = CoefficientField.from_json(arg)
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError("coef", f"cannot parse coefficient field: {exc}")
    green = green_at_infinity(fld)
    dens = elliptic_measure_infinity(fld, green)
    path = _outpath(cfg, "dkp_density.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(("y", "density"))
        for y, v in zip(dens.ys, dens.vals):
            wr.writerow([f"{y:.12g}", f"{v:.12g}"])
    report = {"ratio_gaps": green.ratio_gaps, "pole_heights": green.pole_heights,
              "riesz_mismatch": dens.riesz_mismatch, "flagged": dens.flagged}
    jpath = _outpath(cfg, "dkp_solve.json")
    jpath.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    click.echo(f"density rows={dens.ys.size} flagged={dens.flagged} -> {path}")
    sys.exit(EXIT_FLAGGED if dens.flagged else EXIT_OK)


@dkp.command("experiment")
@click.option("--eps", default="0.2,0.1,0.05", show_default=True)
@click.option("--grid", type=int, default=256, show_default=True)
@_common
@click.pass_context
@_cli_guard
def dkp_experiment_cmd(ctx, eps, grid, **params):
    """The eps-sweep: weak-DKP norm vs Carleson norm vs A-infinity."""
    from ainftylab.elliptic import DKP_HEADER, dkp_experiment

    cfg = _merge_config(ctx, dict(params, eps=eps, grid=grid), "dkp experiment")
    _maybe_print_config(cfg)
    eps_list = _parse_floats(cfg["eps"], "eps")
    rows = dkp_experiment(eps_list, ny=cfg["grid"], ns=cfg["grid"],
                          threads=cfg["threads"])
    path = _outpath(cfg, "dkp_experiment.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(DKP_HEADER)
        for row in rows:
            wr.writerow([f"{v:.12g}" for v in row.as_tuple()])
    click.echo(f"{len(rows)} rows -> {path}")
    sys.exit(EXIT_OK)


@main.command("kernel-table")
@click.option("--kind", type=click.Choice(["bump", "plateau_bump"]), default="bump",
              show_default=True)
@click.option("--eta", type=float, default=0.25, show_default=True)
@click.option("--n", "dim", type=int, default=1, show_default=True)
@_common
@click.pass_context
@_cli_guard
def kernel_table_cmd(ctx, kind, eta, dim, **params):
    """Dump a radial kernel table (t, value, derivative) to CSV for debugging."""
    from ainftylab import kernels

    cfg = _merge_config(ctx, dict(params, kind=kind, eta=eta, dim=dim),
                        "kernel-table")
    _maybe_print_config(cfg)
    tab = kernels.varphi_table(cfg["dim"]) if cfg["kind"] == "bump" \
        else kernels.eta_bump_table(cfg["eta"], cfg["dim"])
    path = _outpath(cfg, "kernel_table.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(("t", "value", "derivative"))
        for i in range(tab.values.size):
            wr.writerow([f"{i * tab.step:.12g}", f"{tab.values[i]:.12g}",
                         f"{tab.derivs[i]:.12g}"])
    click.echo(f"{tab.values.size} rows, support {tab.support:g} -> {path}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
