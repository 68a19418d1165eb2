"""Command line front end.

Subcommands: ``run`` (single trajectory with CSV/TOML artifacts),
``sweep-k`` (Robin-to-limit convergence table with threshold checks),
``sweep-eps`` (Yosida regularization study, report only), ``ctsdep``
(perturbation scaling study), and ``steady`` (long-time run plus
stationary-residual report).

Exit codes: 0 on success, 2 when a requested threshold check fails,
1 on runtime errors (bad config, divergence, I/O).
"""

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import backends, config_io, harness, limit, robin
from .errors import BsacError
from .grid import (integrate_surface, norms, trace, write_bulk_csv,
                   write_surface_csv)

log = logging.getLogger(__name__)


def _parse_values(text, label):
    """Decreasing value list: "1e-1,1e-2,..." or "1e-1:1e-4:7log"."""
    text = text.strip()
    if text.endswith("log"):
        parts = text.split(":")
        if len(parts) != 3:
            raise SystemExit(f"error: {label} range needs start:stop:Nlog")
        start, stop = float(parts[0]), float(parts[1])
        n = int(parts[2][:-3])
        if start <= 0 or stop <= 0 or n < 1:
            raise SystemExit(f"error: {label} log range must be positive")
        return [float(v) for v in
                np.logspace(math.log10(start), math.log10(stop), n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _load_config(args):
    config = config_io.load_config(args.config)
    if getattr(args, "mode", None):
        config = config.with_updates(mode=args.mode)
    if getattr(args, "viscosity", None) is not None:
        config = config.with_updates(viscosity=args.viscosity)
    if getattr(args, "sample_every", None) is not None:
        config = config.with_updates(sample_every=args.sample_every)
    return config


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_energy_csv(path, result):
    cols = result.energy_arrays()
    names = list(cols)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(cols["time"].size):
            writer.writerow([repr(float(cols[n][i])) for n in names])


def _write_table_csv(path, table):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([table.parameter, "x_omega", "x_gamma",
                         "boundary_mismatch"])
        for p, row in zip(table.params, table.rows):
            if row is None:
                writer.writerow([repr(p), "nan", "nan", "nan"])
            else:
                writer.writerow([repr(p), repr(row.x_omega), repr(row.x_gamma),
                                 repr(row.boundary_mismatch)])


def _fit_section(fit):
    return {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
            "n_used": fit.n_used, "excluded_rows": list(fit.excluded)}


def cmd_run(args):
    config = _load_config(args)
    out = _outdir(args)
    if config.mode == "limit":
        result = limit.run_limit(config)
    else:
        result = robin.run(config)
    grid = config.grid

    _write_energy_csv(out / "energy.csv", result)
    for state, phi in zip(result.samples, result.sample_phis):
        tag = f"{state.t:.6f}"
        if result.mode == "limit":
            write_bulk_csv(out / f"fields_t{tag}.csv", state.u, extra=phi)
        else:
            write_bulk_csv(out / f"fields_t{tag}.csv", state.u)
            write_surface_csv(out / f"surface_t{tag}.csv", grid, phi)

    final = result.final
    phi_final = result.sample_phis[-1]
    nu = norms(grid, final.u)
    nphi = norms(grid, phi_final)
    if result.mode == "robin":
        mism = phi_final.map(config.coupling.h) - trace(final.u)
        mismatch = math.sqrt(integrate_surface(grid, mism.map(np.square)))
    else:
        mismatch = 0.0
    config_io.write_toml(out / "summary.toml", {
        "run": {"mode": result.mode, "backend": backends.backend_name(),
                "steps": int(result.times.size - 1), "dt": config.dt,
                "t_final": config.t_final,
                "samples": len(result.samples)},
        "final": {"t": float(final.t), "energy": result.reports[-1].energy,
                  "u_l2": nu.l2, "u_h1_seminorm": nu.h1_seminorm,
                  "u_linf": nu.linf, "phi_l2": nphi.l2,
                  "phi_h1_seminorm": nphi.h1_seminorm,
                  "phi_linf": nphi.linf, "boundary_mismatch": mismatch},
        "warnings": {"messages": list(result.warnings)},
    })
    log.info("run artifacts written to %s", out)
    return 0


def cmd_sweep_k(args):
    config = _load_config(args)
    out = _outdir(args)
    ks = (_parse_values(args.ks, "--ks") if args.ks
          else list(harness.DEFAULT_KS))
    table = harness.sweep_K(config, ks)
    _write_table_csv(out / "table.csv", table)

    lo, hi = (float(v) for v in args.mismatch_band.split(":"))
    failures = list(table.notes)
    sections = {"thresholds": {"mismatch_slope_min": lo,
                               "mismatch_slope_max": hi,
                               "xnorm_slope_min": args.slope_min,
                               "mismatch_r2_min": args.r2_min}}
    for name in ("boundary_mismatch", "x_omega", "x_gamma"):
        fit = table.fits.get(name)
        if fit is None:
            failures.append(f"{name}: no fit")
            continue
        sections[f"{name}_fit"] = _fit_section(fit)
        if name == "boundary_mismatch":
            if not lo <= fit.slope <= hi:
                failures.append(f"mismatch slope {fit.slope:.3f} outside "
                                f"[{lo}, {hi}]")
            if fit.r2 < args.r2_min:
                failures.append(f"mismatch r2 {fit.r2:.4f} < {args.r2_min}")
        elif fit.slope < args.slope_min:
            failures.append(f"{name} slope {fit.slope:.3f} < {args.slope_min}")
    sections["result"] = {"passed": not failures, "failures": failures}
    config_io.write_toml(out / "fit.toml", sections)
    return 0 if not failures else 2


def cmd_sweep_eps(args):
    config = _load_config(args)
    out = _outdir(args)
    epss = _parse_values(args.epss, "--epss")
    table = harness.sweep_eps(config, epss)
    _write_table_csv(out / "table.csv", table)
    sections = {}
    for name in ("x_omega", "x_gamma", "boundary_mismatch"):
        fit = table.fits.get(name)
        if fit is not None:
            sections[f"{name}_fit"] = _fit_section(fit)
    sections["result"] = {"passed": True, "report_only": True,
                          "notes": list(table.notes)}
    config_io.write_toml(out / "fit.toml", sections)
    return 0


def cmd_ctsdep(args):
    config = _load_config(args)
    out = _outdir(args)
    deltas = _parse_values(args.deltas, "--deltas")
    report = harness.ctsdep(config, deltas, args.which)

    with open(out / "table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "x_omega", "x_gamma", "boundary_mismatch",
                         "ratio"])
        for d, row, ratio in zip(report.deltas, report.norms, report.ratios):
            vals = ([repr(row.x_omega), repr(row.x_gamma),
                     repr(row.boundary_mismatch)] if row is not None
                    else ["nan", "nan", "nan"])
            writer.writerow([repr(d)] + vals + [repr(ratio)])

    ok = math.isfinite(report.ratio_band) and report.ratio_band <= args.band
    failures = list(report.notes)
    if not ok:
        failures.append(f"ratio band {report.ratio_band:.4f} exceeds "
                        f"{args.band} (or undefined)")
    config_io.write_toml(out / "fit.toml", {
        "scaling": {"which": report.which, "deltas": list(report.deltas),
                    "ratios": list(report.ratios),
                    "ratio_band": report.ratio_band},
        "result": {"passed": not failures, "failures": failures},
    })
    return 0 if not failures else 2


def cmd_steady(args):
    config = _load_config(args)
    out = _outdir(args)
    result = robin.steady_state(config, tol=args.tol,
                                max_steps=args.max_steps)
    res = robin.stationary_residual(result.state, config)
    write_bulk_csv(out / "fields_final.csv", result.state.u)
    write_surface_csv(out / "surface_final.csv", config.grid,
                      result.state.phi)
    failures = []
    if not result.converged:
        failures.append(f"not converged after {result.iterations} steps "
                        f"(residual {result.residual:.3e})")
    if args.residual_max is not None:
        for name in ("bulk_res", "surface_res", "robin_res"):
            val = getattr(res, name)
            if val > args.residual_max:
                failures.append(f"{name} {val:.3e} > {args.residual_max}")
    config_io.write_toml(out / "summary.toml", {
        "steady": {"converged": result.converged,
                   "iterations": result.iterations,
                   "residual": result.residual, "tol": args.tol,
                   "t": result.state.t},
        "stationary_residual": {"bulk": res.bulk_res,
                                "surface": res.surface_res,
                                "robin": res.robin_res},
        "result": {"passed": not failures, "failures": failures},
    })
    return 0 if not failures else 2


def _add_common(sub):
    sub.add_argument("--config", required=True, help="TOML run configuration")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--mode", choices=("robin", "limit"),
                     help="override the configured mode")
    sub.add_argument("--viscosity", type=float, default=None,
                     help="override the experimental viscosity coefficient")
    sub.add_argument("--sample-every", type=int, default=None,
                     dest="sample_every", help="override the sample stride")
    sub.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bsac",
        description="Coupled bulk-surface Allen-Cahn dynamics with Robin "
                    "transmission and its fast-reaction limit.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("run", help="integrate one trajectory")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("sweep-k", help="Robin-to-limit convergence study")
    _add_common(p)
    p.add_argument("--ks", default=None,
                   help='K values: "1e-1,1e-2,..." or "1e-1:1e-4:7log"')
    p.add_argument("--mismatch-band", default="0.8:1.2",
                   help="accepted mismatch slope range lo:hi")
    p.add_argument("--slope-min", type=float, default=0.35,
                   help="minimum accepted x_omega/x_gamma slope")
    p.add_argument("--r2-min", type=float, default=0.95,
                   help="minimum accepted mismatch fit r2")
    p.set_defaults(func=cmd_sweep_k)

    p = subs.add_parser("sweep-eps", help="Yosida regularization study")
    _add_common(p)
    p.add_argument("--epss", default="1e-1:1e-3:5log",
                   help="eps values, same syntax as --ks")
    p.set_defaults(func=cmd_sweep_eps)

    p = subs.add_parser("ctsdep", help="perturbation scaling study")
    _add_common(p)
    p.add_argument("--which", required=True,
                   choices=("u0", "phi0", "f", "fGamma"))
    p.add_argument("--deltas", default="1e-1,1e-2,1e-3")
    p.add_argument("--band", type=float, default=1.2,
                   help="maximum accepted max/min ratio spread")
    p.set_defaults(func=cmd_ctsdep)

    p = subs.add_parser("steady", help="relax to a stationary state")
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-8,
                   help="stationarity tolerance on the step increment rate")
    p.add_argument("--max-steps", type=int, default=500_000,
                   dest="max_steps")
    p.add_argument("--residual-max", type=float, default=None,
                   dest="residual_max",
                   help="also require stationary residuals below this")
    p.set_defaults(func=cmd_steady)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BsacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
