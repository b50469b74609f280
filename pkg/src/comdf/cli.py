"""Command-line driver.

    comdf design   <scenario.json> [--out report.json] [--json]
    comdf gap      <scenario.json> --l-min 1 --l-max 40 [--out gap.csv]
    comdf simulate <scenario.json> [--out mse.csv] [--seed S]

Exit codes: 0 success, 1 infeasible design or violated precondition,
2 input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .consensus import min_fusion_steps, stability_terms
from .exceptions import ComdfError, ConvergenceError, DesignError, ScenarioError
from .graph import is_strongly_connected
from .model import check_observability
from .scenario import load_scenario
from .sim import run_monte_carlo

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    cfg = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def cmd_design(args) -> int:
    cfg = _load(args)
    C, _ = cfg.augmented()
    connected = is_strongly_connected(cfg.graph)
    observable = check_observability(C, cfg.plant.A)
    report = {"strongly_connected": connected, "observable": observable}
    if not connected:
        print("error: communication graph is not strongly connected", file=sys.stderr)
        _emit(json.dumps(report, indent=2) + "\n", args.out)
        return EXIT_INFEASIBLE
    if not observable:
        print("error: (C, A) is not observable", file=sys.stderr)
        _emit(json.dumps(report, indent=2) + "\n", args.out)
        return EXIT_INFEASIBLE

    design = cfg.consensus_design()
    gains = cfg.gains()
    terms = stability_terms(gains.K, C, cfg.plant.A)
    report.update(
        mu=design.mu.tolist(),
        rho_G=design.rho_G,
        norm_G=design.norm_G,
        **terms,
    )
    try:
        report["l0"] = _finite_or_none(min_fusion_steps(design, gains.K, C, cfg.plant.A))
        report["l0_note"] = None
    except DesignError as exc:
        report["l0"] = None
        report["l0_note"] = str(exc)
    text = json.dumps(report, indent=2) + "\n"
    _emit(text, args.out)
    if args.out and not args.json:
        print(f"rho(G) = {design.rho_G:.6g}, ||G||_2 = {design.norm_G:.6g}, l0 = {report['l0']}")
    if design.rho_G >= 1.0:
        print(f"error: consensus matrix not contracting (rho(G) = {design.rho_G:.6g})", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def gap_csv(report: analysis.GapReport) -> str:
    lines = ["l,gap,bound_radius,bound_norm,rho_G,norm_G,status"]
    for rec in report.records:
        status = "ok" if rec.stable else "unstable"
        lines.append(
            f"{rec.l},{rec.gap:.17g},{rec.bound_radius:.17g},{rec.bound_norm:.17g},"
            f"{report.rho_G:.17g},{report.norm_G:.17g},{status}"
        )
    footer = {k: _finite_or_none(v) if isinstance(v, float) else v for k, v in report.summary().items()}
    lines.append("# " + json.dumps(footer, sort_keys=True))
    return "\n".join(lines) + "\n"


def cmd_gap(args) -> int:
    if args.l_min < 0 or args.l_max < args.l_min:
        print("error: need 0 <= --l-min <= --l-max", file=sys.stderr)
        return EXIT_INPUT
    cfg = _load(args)
    design = cfg.consensus_design()
    if design.rho_G >= 1.0:
        print(f"error: consensus matrix not contracting (rho(G) = {design.rho_G:.6g})", file=sys.stderr)
        return EXIT_INFEASIBLE
    report = analysis.gap_sweep(cfg.plant, cfg.suite, cfg.gains(), design, range(args.l_min, args.l_max + 1))
    _emit(gap_csv(report), args.out)
    return EXIT_OK


def analytic_traces(cfg) -> dict:
    sys_ = analysis.build_error_system(cfg.plant, cfg.suite, cfg.gains(), cfg.consensus_design(), cfg.fusion_steps)
    if not sys_.is_stable():
        return {"sensors": None, "central": float(np.trace(analysis.centralized_block(sys_)))}
    P_l, P_cc = analysis.steady_state(sys_)
    return {
        "sensors": [float(np.trace(sys_.sensor_block(P_l, i))) for i in range(sys_.N)],
        "central": float(np.trace(P_cc[: sys_.n, : sys_.n])),
    }


def cmd_simulate(args) -> int:
    cfg = _load(args)
    design = cfg.consensus_design()
    if design.rho_G >= 1.0:
        print(f"error: consensus matrix not contracting (rho(G) = {design.rho_G:.6g})", file=sys.stderr)
        return EXIT_INFEASIBLE
    series = run_monte_carlo(cfg)
    sensors, central = series.steady()
    summary = {
        "steady_window_start": series.horizon // 2 + 1,
        "steady_mse_sensors": sensors.tolist(),
        "steady_mse_central": central,
        "analytic_trace": analytic_traces(cfg),
    }
    csv = series.to_csv()
    if args.out:
        Path(args.out).write_text(csv)
        summary_path = Path(str(args.out) + ".summary.json")
        summary_path.write_text(json.dumps(summary, indent=2) + "\n")
        if args.json:
            print(json.dumps(summary, indent=2))
    else:
        sys.stdout.write(csv)
        print(json.dumps(summary), file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comdf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--json", action="store_true", help="machine-readable report on stdout")

    p = sub.add_parser("design", help="consensus design and fusion-step threshold")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("gap", help="steady-state gap sweep over fusion steps")
    common(p)
    p.add_argument("--l-min", type=int, default=1)
    p.add_argument("--l-max", type=int, default=40)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("simulate", help="Monte Carlo MSE run")
    common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DesignError, ConvergenceError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ComdfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
