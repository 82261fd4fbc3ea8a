"""Command-line front end: fit, simulate, bootstrap.

Every run writes its artifacts as plain CSV at full precision plus a
manifest.json recording the complete configuration, the seed, the
package version, and wall time; feeding a manifest back through
``--config`` reproduces the run.  Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .data import load_csv, standardize
from .estimators import fit, fit_cpsir, normalize_block_identity
from .inference import (
    bootstrap_sd,
    confidence_intervals,
    coverage_experiment,
    free_parameter_names,
)
from .moments import EstimatorKind
from .simulate import SimSetting, default_anchor_rows, generate
from .stiefel import OptimConfig
from .studies import aggregate, run_study

METHODS = ("forward", "cpsir", "ircp", "irsemi")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def _write_manifest(out_dir, command, args_dict, started, extra=None):
    manifest = {
        "command": command,
        "config": args_dict,
        "seed": args_dict.get("seed"),
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _optim_config(args) -> OptimConfig:
    kwargs = {}
    if getattr(args, "max_iter", None) is not None:
        kwargs["max_iter"] = args.max_iter
    if getattr(args, "eps0", None) is not None:
        kwargs["eps0"] = args.eps0
    return OptimConfig(**kwargs)


def _parse_anchors(text, p):
    rows = tuple(int(tok) - 1 for tok in text.split(","))
    if any(r < 0 or r >= p for r in rows):
        raise ValueError(f"anchor rows {text} out of range 1..{p}")
    return rows


def _load_dataset(args):
    ds = load_csv(args.data, time=args.time, status=args.status,
                  covariates=args.covariates.split(",") if args.covariates else None)
    if args.standardize:
        ds, _, _ = standardize(ds)
    return ds


def cmd_fit(args) -> int:
    started = time.perf_counter()
    ds = _load_dataset(args)
    kind = EstimatorKind.parse(args.method)
    os.makedirs(args.out, exist_ok=True)
    names = list(ds.names) if ds.names else [f"x{j + 1}" for j in range(ds.p)]

    extra = {}
    if kind is EstimatorKind.CPSIR:
        b_hat, svals = fit_cpsir(ds, args.d)
        extra["singular_values"] = [float(s) for s in svals]
        extra["converged"] = True
    else:
        report = fit(ds, args.d, kind, _optim_config(args))
        b_hat = report.b_hat
        extra.update(
            singular_values=[float(s) for s in report.init_singular_values],
            converged=bool(report.converged),
            iterations=int(report.iterations),
            final_objective=float(report.objective_trace[-1]),
            initial_objective=float(report.init_objective),
        )

    norm_dir = normalize_block_identity(b_hat)
    extra["anchor_rows"] = [int(r) + 1 for r in norm_dir.anchor_rows]

    dir_cols = [f"dir_{c + 1}" for c in range(args.d)]
    _write_csv(os.path.join(args.out, "b_raw.csv"), ["covariate", *dir_cols],
               [[names[r], *b_hat[r]] for r in range(ds.p)])
    _write_csv(os.path.join(args.out, "b_normalized.csv"), ["covariate", *dir_cols],
               [[names[r], *norm_dir.b_norm[r]] for r in range(ds.p)])
    proj = ds.x @ b_hat
    _write_csv(os.path.join(args.out, "projections.csv"),
               [*(f"proj_{c + 1}" for c in range(args.d)), "time", "status"],
               [[*proj[i], ds.y[i], int(ds.delta[i])] for i in range(ds.n)])
    _write_manifest(args.out, "fit", vars(args), started, extra)
    return 0


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    methods = [m.strip().lower() for m in args.methods.split(",")]
    for m in methods:
        EstimatorKind.parse(m)
    os.makedirs(args.out, exist_ok=True)
    results = run_study(
        args.setting, args.p, args.n, args.reps, methods,
        seed=args.seed, d=args.d, cfg=_optim_config(args), n_jobs=args.threads,
    )
    # timings go to their own file so the estimate artifacts stay
    # byte-identical across reruns with the same seed
    _write_csv(
        os.path.join(args.out, "replications.csv"),
        ["rep", "method", "frob", "trace_corr", "canon_corr", "converged", "iterations"],
        [[r.rep, r.method, r.frob, r.trace_corr, r.canon_corr,
          int(r.converged), r.iterations] for r in results],
    )
    _write_csv(
        os.path.join(args.out, "timings.csv"),
        ["rep", "method", "seconds"],
        [[r.rep, r.method, r.seconds] for r in results],
    )
    summary = aggregate(results)
    scale = 100.0 if args.scale_x100 else 1.0
    rows = []
    for method, stats in summary.items():
        rows.append([
            method, stats["reps"],
            stats["frob_mean"], stats["frob_sd"],
            stats["trace_corr_mean"], stats["trace_corr_sd"],
            stats["canon_corr_mean"], stats["canon_corr_sd"],
        ])
        print(
            f"{method:>8}: frob {scale * stats['frob_mean']:8.3f}"
            f" ({scale * stats['frob_sd']:.3f})"
            f"  tr {scale * stats['trace_corr_mean']:8.3f}"
            f"  ccor {scale * stats['canon_corr_mean']:8.3f}"
            f"  {stats['seconds_mean']:.2f} s/fit"
        )
    _write_csv(
        os.path.join(args.out, "summary.csv"),
        ["method", "reps", "frob_mean", "frob_sd", "trace_corr_mean", "trace_corr_sd",
         "canon_corr_mean", "canon_corr_sd"],
        rows,
    )
    _write_manifest(args.out, "simulate", vars(args), started,
                    {"seconds_mean": {m: s["seconds_mean"] for m, s in summary.items()}})
    return 0


def cmd_bootstrap(args) -> int:
    started = time.perf_counter()
    os.makedirs(args.out, exist_ok=True)
    if args.data:
        ds = _load_dataset(args)
        anchors = _parse_anchors(args.anchors, ds.p) if args.anchors else None
    else:
        setting = SimSetting(args.setting, args.p, args.n, args.seed)
        ds, _ = generate(setting)
        anchors = (_parse_anchors(args.anchors, ds.p) if args.anchors
                   else default_anchor_rows(args.setting))
    kind = EstimatorKind.parse(args.method)
    cfg = _optim_config(args)

    from .inference import estimate_direction

    b_hat = estimate_direction(ds, args.d, kind, cfg)
    if anchors is None:
        anchors = normalize_block_identity(b_hat).anchor_rows
    estimate = normalize_block_identity(b_hat, anchors).free_parameters()
    boot = bootstrap_sd(ds, args.d, kind, anchors, n_boot=args.n_boot,
                        cfg=cfg, seed=args.seed, n_jobs=args.threads)
    ci = confidence_intervals(estimate, boot.sd, args.level)
    names = free_parameter_names(ds.p, args.d, anchors)
    _write_csv(
        os.path.join(args.out, "bootstrap.csv"),
        ["param", "estimate", "sd_hat", "ci_lo", "ci_hi"],
        [[names[i], estimate[i], boot.sd[i], ci[i, 0], ci[i, 1]]
         for i in range(len(names))],
    )
    _write_manifest(args.out, "bootstrap", vars(args), started,
                    {"anchor_rows": [int(r) + 1 for r in anchors],
                     "n_failed": boot.n_failed})
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survdr",
        description="Dimension reduction for right-censored survival data.",
    )
    parser.add_argument("--config", help="JSON file of argument defaults "
                        "(a previous run's manifest.json also works)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one estimator to a CSV dataset")
    p_fit.add_argument("--data", required=True, help="CSV file with a header row")
    p_fit.add_argument("--time", required=True, help="observed-time column")
    p_fit.add_argument("--status", required=True, help="0/1 event-indicator column")
    p_fit.add_argument("--covariates", help="comma-separated covariate columns "
                       "(default: all other columns)")
    p_fit.add_argument("--d", type=int, required=True, help="subspace dimension")
    p_fit.add_argument("--method", required=True, choices=METHODS)
    p_fit.add_argument("--standardize", action="store_true",
                       help="rescale covariates to mean 0, sd 1 first")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--max-iter", type=int, dest="max_iter")
    p_fit.add_argument("--eps0", type=float)
    p_fit.add_argument("--out", default=".")
    p_fit.set_defaults(run=cmd_fit)

    p_sim = sub.add_parser("simulate", help="replicated study on a benchmark setting")
    p_sim.add_argument("--setting", type=int, required=True, choices=(1, 2, 3, 4))
    p_sim.add_argument("--p", type=int, default=6)
    p_sim.add_argument("--n", type=int, default=400)
    p_sim.add_argument("--reps", type=int, default=20)
    p_sim.add_argument("--d", type=int, help="override the setting's true dimension")
    p_sim.add_argument("--methods", default="cpsir",
                       help="comma-separated subset of " + ",".join(METHODS))
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_sim.add_argument("--max-iter", type=int, dest="max_iter")
    p_sim.add_argument("--eps0", type=float)
    p_sim.add_argument("--scale-x100", action="store_true",
                       help="display summaries scaled by 100 (files stay unscaled)")
    p_sim.add_argument("--out", default=".")
    p_sim.set_defaults(run=cmd_simulate)

    p_boot = sub.add_parser("bootstrap", help="bootstrap sds and confidence intervals")
    src = p_boot.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV file with a header row")
    src.add_argument("--setting", type=int, choices=(1, 2, 3, 4),
                     help="generate one dataset from this benchmark setting")
    p_boot.add_argument("--time", default="time")
    p_boot.add_argument("--status", default="status")
    p_boot.add_argument("--covariates")
    p_boot.add_argument("--standardize", action="store_true")
    p_boot.add_argument("--p", type=int, default=6)
    p_boot.add_argument("--n", type=int, default=400)
    p_boot.add_argument("--d", type=int, required=True)
    p_boot.add_argument("--method", required=True, choices=METHODS)
    p_boot.add_argument("--n-boot", type=int, default=100, dest="n_boot")
    p_boot.add_argument("--anchors", help="comma-separated 1-based anchor rows")
    p_boot.add_argument("--level", type=float, default=0.95)
    p_boot.add_argument("--seed", type=int, default=0)
    p_boot.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_boot.add_argument("--max-iter", type=int, dest="max_iter")
    p_boot.add_argument("--eps0", type=float)
    p_boot.add_argument("--out", default=".")
    p_boot.set_defaults(run=cmd_bootstrap)
    return parser


def _apply_config_file(parser, argv):
    # pull --config out, load its keys as defaults, then parse normally
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    with open(known.config, "r", encoding="utf-8") as fh:
        loaded = json.load(fh)
    if "config" in loaded and isinstance(loaded["config"], dict):
        loaded = loaded["config"]  # a manifest.json
    loaded = {k: v for k, v in loaded.items() if k not in ("run", "command", "config")}
    args = parser.parse_args(argv)
    for key, value in loaded.items():
        if getattr(args, key, None) in (None, False):
            setattr(args, key, value)
    return args


def main(argv=None) -> int:
    parser = _build_parser()
    args = _apply_config_file(parser, sys.argv[1:] if argv is None else list(argv))
    if args.command == "fit" and args.method == "forward" and args.d != 1:
        parser.error("--method forward supports --d 1 only; "
                     "use ircp or irsemi for d > 1")
    try:
        return args.run(args)
    except (ValueError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
