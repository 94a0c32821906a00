"""Command-line entry point: simulate, test, locate, fit, critvals, bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import dgp as dgp_mod
from .errors import FactorBreakError, InvalidParamsError, InvalidSpecError
from .loading import boundary_loadings
from .locate import locate_change_point
from .panel import FractionGrid, center_panel, load_panel, save_panel
from .sntest import (
    DEFAULT_CV_SEED,
    DEFAULT_GRID_SIZE,
    DEFAULT_REPLICATIONS,
    CriticalValueTable,
    get_critical_values,
    simulate_critical_values,
    test_change_point,
)

SCHEMA_VERSION = 1


def _add_panel_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--input", required=True, help="panel CSV, one time point per row")
    sp.add_argument("--has-header", action="store_true", help="skip the first CSV row")
    sp.add_argument("--center", action="store_true", help="remove column means first")


def _add_pipeline_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--h0", type=int, default=1, help="max lag pooled into the moments")
    sp.add_argument("--eta1", type=float, default=0.1)
    sp.add_argument("--eta2", type=float, default=0.9)
    sp.add_argument("--k1", default="auto", help="factor count before the break, or 'auto'")
    sp.add_argument("--k2", default="auto", help="factor count after the break, or 'auto'")


def _add_cv_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--critvals-file", default=None, help="precomputed table JSON")
    sp.add_argument("--cache-dir", default=None, help="override the critical-value cache")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorbreak",
        description="Change-point estimation and testing for latent factor panels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="draw a synthetic panel")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k1", type=int, default=3)
    sp.add_argument("--k2", type=int, default=3)
    sp.add_argument("--delta1", type=float, default=0.0)
    sp.add_argument("--delta2", type=float, default=0.0)
    sp.add_argument("--gamma0", type=float, default=None, help="omit for no change")
    sp.add_argument("--rho-e", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="panel CSV path")
    sp.add_argument("--truth-out", default=None, help="truth JSON path")

    sp = sub.add_parser("critvals", help="simulate and store a critical-value table")
    sp.add_argument("--eta1", type=float, default=0.1)
    sp.add_argument("--eta2", type=float, default=0.9)
    sp.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    sp.add_argument("--replications", type=int, default=DEFAULT_REPLICATIONS)
    sp.add_argument("--seed", type=int, default=DEFAULT_CV_SEED)
    sp.add_argument("--out", required=True)

    for name, helptext in (
        ("test", "test whether a change point exists"),
        ("locate", "estimate the change-point location"),
        ("fit", "test, then locate on rejection"),
    ):
        sp = sub.add_parser(name, help=helptext)
        _add_panel_args(sp)
        _add_pipeline_args(sp)
        _add_cv_args(sp)
        sp.add_argument(
            "--alpha", type=float, action="append", default=None,
            help="significance level (repeatable; default 0.05)",
        )
        sp.add_argument("--out", default=None, help="result JSON path (default stdout)")
        if name == "locate":
            sp.add_argument(
                "--export-loadings", default=None,
                help="prefix for loading/complement CSV exports",
            )
        if name == "fit":
            sp.add_argument(
                "--force-locate", action="store_true",
                help="locate even when the test does not reject",
            )

    sp = sub.add_parser("bench", help="run a Monte Carlo experiment plan")
    sp.add_argument("--plan", required=True, help="plan JSON")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--threads", type=int, default=None, help="1 = fully serial")
    _add_cv_args(sp)

    return parser


def _parse_k(value) -> int | None:
    if value is None or str(value).lower() == "auto":
        return None
    k = int(value)
    if k < 1:
        raise ValueError(f"factor count must be positive, got {k}")
    return k


def _validate_etas(args) -> None:
    if not 0.0 < args.eta1 < 1.0 or not 0.0 < args.eta2 < 1.0:
        raise ValueError("eta1 and eta2 must lie in (0, 1)")
    if args.eta1 >= args.eta2:
        raise ValueError("eta1 must be < eta2")


def _load_input_panel(args):
    panel = load_panel(args.input, has_header=args.has_header)
    if args.center:
        panel = center_panel(panel)
    return panel


def _cv_for(args) -> CriticalValueTable:
    if args.critvals_file:
        return CriticalValueTable.load(args.critvals_file)
    return get_critical_values(args.eta1, args.eta2, cache_dir=args.cache_dir)


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_simulate(args) -> int:
    spec = dgp_mod.DgpSpec(
        n=args.n, p=args.p, k1=args.k1, k2=args.k2,
        delta1=args.delta1, delta2=args.delta2,
        gamma0=args.gamma0, rho_e=args.rho_e, seed=args.seed,
    )
    panel, truth = dgp_mod.generate(spec)
    save_panel(panel, args.out)
    truth_path = args.truth_out or str(Path(args.out).with_suffix(".truth.json"))
    stem = Path(truth_path)
    loads1 = str(stem.with_suffix("")) + "_loadings1.csv"
    np.savetxt(loads1, truth.a1, fmt="%.17g", delimiter=",")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "gamma0": truth.gamma0,
        "r0": truth.r0,
        "k1": spec.k1,
        "k2": spec.k2,
        "delta1": spec.delta1,
        "delta2": spec.delta2,
        "seed": spec.seed,
        "loadings_files": [loads1],
    }
    if truth.a2 is not None:
        loads2 = str(stem.with_suffix("")) + "_loadings2.csv"
        np.savetxt(loads2, truth.a2, fmt="%.17g", delimiter=",")
        payload["loadings_files"].append(loads2)
    Path(truth_path).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def _cmd_critvals(args) -> int:
    table = simulate_critical_values(
        args.eta1, args.eta2, args.grid_size, args.replications, args.seed
    )
    table.save(args.out)
    return 0


def _cmd_test(args) -> int:
    _validate_etas(args)
    alphas = tuple(args.alpha) if args.alpha else (0.05,)
    panel = _load_input_panel(args)
    result = test_change_point(
        panel, args.eta1, args.eta2, args.h0,
        _parse_k(args.k1), _parse_k(args.k2),
        cv_table=_cv_for(args), alphas=alphas,
    )
    _emit(result.to_dict(), args.out)
    return 0


def _cmd_locate(args) -> int:
    _validate_etas(args)
    panel = _load_input_panel(args)
    fit = locate_change_point(
        panel, FractionGrid(args.eta1, args.eta2, panel.n), args.h0,
        _parse_k(args.k1), _parse_k(args.k2),
    )
    if args.export_loadings:
        np.savetxt(args.export_loadings + "_q1.csv", fit.loading1.q_hat.basis,
                   fmt="%.17g", delimiter=",")
        np.savetxt(args.export_loadings + "_q2.csv", fit.loading2.q_hat.basis,
                   fmt="%.17g", delimiter=",")
    _emit(fit.to_dict(), args.out)
    return 0


def _cmd_fit(args) -> int:
    _validate_etas(args)
    alphas = tuple(args.alpha) if args.alpha else (0.05,)
    panel = _load_input_panel(args)
    k1, k2 = _parse_k(args.k1), _parse_k(args.k2)
    bnd = boundary_loadings(panel, args.eta1, args.eta2, args.h0, k1, k2)
    result = test_change_point(
        panel, args.eta1, args.eta2, args.h0,
        cv_table=_cv_for(args), alphas=alphas, boundary=bnd,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "test": result.to_dict(),
        "fit": None,
    }
    if result.reject[alphas[0]] or args.force_locate:
        fit = locate_change_point(
            panel, FractionGrid(args.eta1, args.eta2, panel.n), args.h0, boundary=bnd
        )
        payload["fit"] = fit.to_dict()
    _emit(payload, args.out)
    return 0


def _cmd_bench(args) -> int:
    plan = bench_mod.ExperimentPlan.from_json(args.plan)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_jobs = args.threads if args.threads is not None else -1
    if args.critvals_file:
        cv = CriticalValueTable.load(args.critvals_file)
    else:
        cv = get_critical_values(plan.eta1, plan.eta2, cache_dir=args.cache_dir)
    null_cells = tuple(c for c in plan.cells if not c.has_change)
    change_cells = tuple(c for c in plan.cells if c.has_change)
    report: dict = {"schema_version": SCHEMA_VERSION}
    if null_cells:
        sub = bench_mod.ExperimentPlan(null_cells, plan.eta1, plan.eta2, plan.h0)
        size = bench_mod.run_size_experiment(sub, cv, n_jobs=n_jobs)
        bench_mod.write_rows_csv(size["rows"], str(out / "table1.csv"))
        report["size"] = size
    if change_cells:
        sub = bench_mod.ExperimentPlan(change_cells, plan.eta1, plan.eta2, plan.h0)
        power = bench_mod.run_power_location_experiment(sub, cv, n_jobs=n_jobs)
        bench_mod.write_rows_csv(power["power_rows"], str(out / "table2.csv"))
        loc_rows = [
            {k: row[k] for k in ("n", "p", "setting", "mean_abs_gamma_err", "replications")}
            for row in power["location_rows"]
        ]
        dist_rows = [
            {k: row[k] for k in
             ("n", "p", "setting", "mean_dist_regime1", "mean_dist_regime2", "replications")}
            for row in power["location_rows"]
        ]
        bench_mod.write_rows_csv(loc_rows, str(out / "table3.csv"))
        bench_mod.write_rows_csv(dist_rows, str(out / "table4.csv"))
        bench_mod.write_rows_csv(power["histogram_rows"], str(out / "histogram_gamma.csv"))
        report["power_location"] = power
    bench_mod.write_report_json(report, str(out / "report.json"))
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "critvals": _cmd_critvals,
    "test": _cmd_test,
    "locate": _cmd_locate,
    "fit": _cmd_fit,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses code 2 for usage errors
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, InvalidParamsError, InvalidSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FactorBreakError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
