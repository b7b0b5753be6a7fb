"""Command-line front end: run experiments, check discretization orders,
list the initial-data families.

Error handling contract: every failure exits through a one-line message on
stderr of the form ``gmcf: error: <category>: <detail>`` and a nonzero exit
code.  Run outcomes map to exit codes 0 (converged), 2 (time horizon hit),
3 (invariant breach), 4 (non-finite values); usage and config problems
exit 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable, Sequence

import numpy as np

from . import analytic, geometry
from .config import ConfigError, ExperimentConfig, config_items, parse_config
from .diagnostics import DiagnosticsRecord, convergence_report, observed_order
from .flow import FlowState, StopReason, StopStatus, run
from .grid import GridSpec, ScalarField, diff1, diff2
from .maps import FAMILIES, make_linear, make_scalar_bump, make_shear_composition

CSV_COLUMNS = (
    "t", "step", "dt", "area", "min_J", "max_speed",
    "min_det2", "max_det2", "max_two_dilation", "max_grad",
)

_EXIT_BY_REASON = {
    StopReason.CONVERGED: 0,
    StopReason.MAX_TIME_REACHED: 2,
    StopReason.INVARIANT_BREACH: 3,
    StopReason.NON_FINITE: 4,
}

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


class UsageError(Exception):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on its own; route through UsageError so
    # every usage failure takes the exit-1 path with the one-line format.
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _fmt(value: float) -> str:
    return "%.17g" % value


def _csv_row(r: DiagnosticsRecord) -> str:
    cells = [
        _fmt(r.t), str(r.step), _fmt(r.dt), _fmt(r.area), _fmt(r.min_j),
        _fmt(r.max_speed),
        "" if r.min_det2 is None else _fmt(r.min_det2),
        "" if r.max_det2 is None else _fmt(r.max_det2),
        _fmt(r.max_two_dilation), _fmt(r.max_grad),
    ]
    return ",".join(cells)


def write_csv(records: Sequence[DiagnosticsRecord], path: str) -> None:
    """Write the time series with a mandatory header, '\\n' line endings."""
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(_csv_row(r) for r in records)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def build_summary(
    cfg: ExperimentConfig,
    records: Sequence[DiagnosticsRecord],
    status: StopStatus,
) -> dict:
    report = convergence_report(records)
    final = records[-1]
    return {
        "status": status.reason.value,
        "steps": status.step,
        "final_time": status.t,
        "final_area": final.area,
        "final_max_speed": final.max_speed,
        "final_min_J": final.min_j,
        "invariant_violations": {
            "area_monotonicity": report.area_violations,
            "min_J_monotonicity": report.min_j_violations,
            "guard": 1 if status.reason is StopReason.INVARIANT_BREACH else 0,
        },
        "resolved_config": dict(config_items(cfg)),
    }


def run_experiment(
    cfg: ExperimentConfig,
) -> tuple[FlowState, list[DiagnosticsRecord], StopStatus]:
    """Run the flow and emit the CSV series, JSON summary, optional figure."""
    state, records, status = run(cfg)
    write_csv(records, cfg.csv_path)
    summary = build_summary(cfg, records, status)
    with open(cfg.json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if cfg.plot_path is not None:
        from .plotting import render_diagnostics

        shape = "x".join(str(k) for k in cfg.resolution)
        render_diagnostics(records, cfg.plot_path, title=f"{cfg.family} {shape}")
    return state, records, status


def _cmd_run(config_path: str, overrides: Sequence[str]) -> int:
    try:
        with open(config_path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path!r}: {exc}") from None
    cfg = parse_config(text, overrides)
    state, records, status = run_experiment(cfg)
    print(f"wrote {cfg.csv_path} ({len(records)} records) and {cfg.json_path}")
    if cfg.plot_path is not None:
        print(f"wrote {cfg.plot_path}")
    print(f"status: {status.reason.value} at step {status.step}, t = {state.t:.6g}")
    code = _EXIT_BY_REASON[status.reason]
    if code != 0:
        detail = status.detail or status.reason.value
        print(f"gmcf: error: {status.reason.value}: {detail}", file=sys.stderr)
    return code


def _order_checks() -> list[tuple[str, Callable[[int], float]]]:
    """Named error evaluators measured against the closed-form oracle."""

    def sin_field(N: int) -> tuple[GridSpec, np.ndarray]:
        grid = GridSpec((N,))
        return grid, grid.axes()[0]

    def e_diff1(N: int) -> float:
        grid, x = sin_field(N)
        d = diff1(ScalarField(grid, np.sin(x)), 0)
        return float(np.abs(d.values - np.cos(x)).max())

    def e_diff2(N: int) -> float:
        grid, x = sin_field(N)
        d = diff2(ScalarField(grid, np.sin(x)), 0, 0)
        return float(np.abs(d.values + np.sin(x)).max())

    def e_velocity(N: int) -> float:
        grid = GridSpec((N, N))
        mf = make_shear_composition(grid, 0.3, 0.3)
        jf = geometry.jet(mf)
        v = geometry.velocity(jf, geometry.induced_metric(jf))
        amap = analytic.shear_composition_map(0.3, 0.3)
        vref = analytic.reference_velocity(amap, grid.mesh())
        return float(np.abs(v - vref).max())

    def e_det_drift(N: int) -> float:
        grid = GridSpec((N, N))
        jf = geometry.jet(make_shear_composition(grid, 0.4, 0.4))
        return float(np.abs(geometry.jacobian2(jf).values - 1.0).max())

    def e_div_gap(N: int) -> float:
        grid = GridSpec((N,))
        mf = make_scalar_bump(grid, 1.0, (1,))
        jf = geometry.jet(mf)
        v = geometry.velocity(jf, geometry.induced_metric(jf))
        lhs = geometry.div_form_residual(mf).values
        rhs = geometry.j1_field(jf).values * v[0]
        return float(np.abs(lhs - rhs).max())

    def e_linear(N: int) -> float:
        grid = GridSpec((N, N))
        W = np.array([[2.0, 1.0], [1.0, 1.0]])
        return geometry.mss_residual(make_linear(grid, W, "torus"))

    return [
        ("diff1 on sin x", e_diff1),
        ("diff2 on sin x", e_diff2),
        ("velocity on shear_composition(0.3, 0.3)", e_velocity),
        ("det df drift on shear_composition(0.4, 0.4)", e_det_drift),
        ("div-form vs system-form gap on sin x", e_div_gap),
        ("mss residual on linear [[2,1],[1,1]]", e_linear),
    ]


def _cmd_order_check(resolutions_arg: str) -> int:
    try:
        resolutions = tuple(int(s) for s in resolutions_arg.split(","))
    except ValueError:
        raise ConfigError(
            f"invalid --resolutions {resolutions_arg!r}, expected e.g. 32,64,128"
        ) from None
    width = max(len(label) for label, _ in _order_checks())
    for label, evaluator in _order_checks():
        est = observed_order(evaluator, resolutions)
        print(f"{label:<{width}}  {est}")
    return 0


def _cmd_list_families() -> int:
    for name in sorted(FAMILIES):
        fam = FAMILIES[name]
        print(f"{name}  (target: {fam.default_target_kind})")
        print(f"    {fam.summary}")
        if not fam.params:
            print("    no parameters")
        for p in fam.params:
            req = "required" if p.required else "optional"
            print(f"    map.{p.name}  [{p.kind}, {req}]  {p.doc}")
    return 0


def _apply_thread_cap() -> None:
    raw = os.environ.get("GMCF_THREADS")
    if raw is None:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"GMCF_THREADS must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"GMCF_THREADS must be a positive integer, got {raw!r}")
    for var in _THREAD_ENV_VARS:
        os.environ.setdefault(var, str(cap))


def _build_parser() -> _Parser:
    parser = _Parser(prog="gmcf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    run_p = sub.add_parser(
        "run", help="run one experiment from a config file, writing CSV and JSON"
    )
    run_p.add_argument("config", help="path to a 'key = value' config file")

    order_p = sub.add_parser(
        "order-check", help="measure discretization orders against the oracle"
    )
    order_p.add_argument(
        "--resolutions",
        default="32,64,128",
        help="comma-separated doubling sequence (default 32,64,128)",
    )

    sub.add_parser("list-families", help="list initial-data families and parameters")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        _apply_thread_cap()
        parser = _build_parser()
        args, extras = parser.parse_known_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: run | order-check | list-families")
        if args.command != "run" and extras:
            raise UsageError(f"unrecognized arguments: {' '.join(extras)}")
        if args.command == "run":
            return _cmd_run(args.config, extras)
        if args.command == "order-check":
            return _cmd_order_check(args.resolutions)
        return _cmd_list_families()
    except UsageError as exc:
        print(f"gmcf: error: usage: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"gmcf: error: config: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"gmcf: error: config: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"gmcf: error: io: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
