"""Command-line surface: dsep, check, fit, simulate, calibrate.

Exit status 0 on success, 1 on domain errors (the module's message is
printed verbatim), 2 on usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .data import ColumnSchema, load_matched_csv, to_csv
from .errors import (
    DatasetError,
    FitError,
    GraphError,
    QueryError,
    SimulationError,
)
from .gest import estimate_direct_effect, estimate_kv, estimate_text
from .graph import DirectEffectQuery, augment_with_interventions, parse_graph
from .dsep import d_separated, find_open_path, render_path
from .identify import report_kv, report_text, search_adjustment_sets
from .simulate import (
    SCENARIOS,
    config_from_kv,
    replicate_study,
    sample_matched,
    simulate_cohort,
)

_DOMAIN_ERRORS = (
    GraphError,
    QueryError,
    DatasetError,
    FitError,
    SimulationError,
    ValueError,
    KeyError,
    OSError,
)


def _node_list(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [part.strip() for part in raw.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctrldirect",
        description=(
            "Identify and estimate controlled direct effects from matched "
            "case-control data."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_dsep = sub.add_parser("dsep", help="d-separation query on a graph file")
    p_dsep.add_argument("--graph", required=True, help="graph file")
    p_dsep.add_argument("--a", required=True, help="first node set, comma-separated")
    p_dsep.add_argument("--b", required=True, help="second node set, comma-separated")
    p_dsep.add_argument("--given", default="", help="conditioning set, comma-separated")
    _add_format(p_dsep)

    p_check = sub.add_parser(
        "check", help="which estimation route does the diagram license?"
    )
    p_check.add_argument("--graph", required=True)
    p_check.add_argument("--x", required=True, help="exposure node")
    p_check.add_argument("--m", required=True, help="mediator node")
    p_check.add_argument("--y", required=True, help="outcome node")
    _add_format(p_check)

    p_fit = sub.add_parser("fit", help="estimate the direct effect from a CSV file")
    p_fit.add_argument("--data", required=True, help="matched-pair CSV file")
    p_fit.add_argument("--pair-col", required=True)
    p_fit.add_argument("--y-col", required=True)
    p_fit.add_argument("--x-col", required=True)
    p_fit.add_argument("--m-col", required=True)
    p_fit.add_argument("--z-cols", default="", help="covariate columns, comma-separated")
    p_fit.add_argument("--ci-level", type=float, default=0.95)
    p_fit.add_argument(
        "--prevalence-hint",
        type=float,
        default=None,
        help="cohort outcome prevalence, if known; above 0.05 stores a warning",
    )
    _add_format(p_fit)

    p_sim = sub.add_parser("simulate", help="write a simulated matched-pair CSV")
    _add_scenario_args(p_sim)
    p_sim.add_argument("--n-pairs", type=int, default=None, help="override pair count")
    p_sim.add_argument("--out", default=None, help="output file (default stdout)")

    p_cal = sub.add_parser("calibrate", help="replicate simulate+fit and summarize")
    _add_scenario_args(p_cal)
    p_cal.add_argument("--reps", type=int, required=True)
    p_cal.add_argument("--out-csv", default=None, help="write per-replicate CSV here")
    _add_format(p_cal)

    return parser


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=("text", "kv"), default="text", dest="fmt"
    )


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="key-value simulation config file")
    source.add_argument(
        "--scenario", choices=sorted(SCENARIOS), help="built-in scenario preset"
    )
    parser.add_argument("--seed", type=int, required=True, help="RNG seed (explicit)")


def _load_config(args: argparse.Namespace):
    from dataclasses import replace

    if args.config is not None:
        cfg = config_from_kv(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = SCENARIOS[args.scenario]()
    cfg = replace(cfg, seed=args.seed)
    if getattr(args, "n_pairs", None) is not None:
        cfg = replace(cfg, n_pairs=args.n_pairs)
    return cfg


def _read_graph(path: str):
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def _cmd_dsep(args: argparse.Namespace) -> int:
    dag = _read_graph(args.graph)
    a, b, c = _node_list(args.a), _node_list(args.b), _node_list(args.given)
    separated = d_separated(dag, a, b, c)
    witness = None if separated else find_open_path(dag, a, b, c)
    if args.fmt == "kv":
        print(f"separated {str(separated).lower()}")
        if witness:
            print(f"witness {render_path(dag, witness)}")
    else:
        if separated:
            print("d-separated")
        else:
            print("d-connected")
            if witness:
                print(f"open path: {render_path(dag, witness)}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    dag = _read_graph(args.graph)
    query = DirectEffectQuery(x=args.x, m=args.m, y=args.y)
    query.validate(dag)
    missing = [
        t
        for t, sigma in ((args.x, query.sigma_x()), (args.m, query.sigma_m()))
        if not dag.has_node(sigma)
    ]
    if missing:
        dag = augment_with_interventions(dag, missing)
    report = search_adjustment_sets(dag, query)
    render = report_kv if args.fmt == "kv" else report_text
    sys.stdout.write(render(report))
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    schema = ColumnSchema(
        pair_col=args.pair_col,
        y_col=args.y_col,
        x_col=args.x_col,
        m_col=args.m_col,
        z_cols=tuple(_node_list(args.z_cols)),
    )
    dataset = load_matched_csv(Path(args.data).read_text(encoding="utf-8"), schema)
    est = estimate_direct_effect(
        dataset, ci_level=args.ci_level, prevalence_hint=args.prevalence_hint
    )
    render = estimate_kv if args.fmt == "kv" else estimate_text
    sys.stdout.write(render(est, dataset.covariate_names))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dataset = sample_matched(simulate_cohort(cfg))
    text = to_csv(dataset)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {dataset.n_pairs} pairs to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    report = replicate_study(cfg, args.reps)
    if args.out_csv:
        Path(args.out_csv).write_text(report.to_csv(), encoding="utf-8")
    if args.fmt == "kv":
        sys.stdout.write(_calibration_kv(report))
    else:
        sys.stdout.write(report.summary_text())
    return 0


def _calibration_kv(report) -> str:
    pairs: list[tuple[str, object]] = [
        ("n_reps", report.n_reps),
        ("n_ok", report.n_ok),
        ("psi_true", report.psi_true),
        ("mean_psi_hat", report.mean_psi_hat),
        ("bias_psi", report.bias_psi),
        ("sd_psi_hat", report.sd_psi_hat),
        ("mean_se", report.mean_se),
        ("coverage", report.coverage),
        ("mean_delta_hat", report.mean_delta_hat),
        ("bias_delta", report.bias_delta),
        ("identity_mean", report.identity_mean),
        ("identity_se", report.identity_se),
        ("identity_n", report.identity_n),
        ("rng", report.rng),
        ("seed", report.seed),
    ]
    lines = []
    for key, value in pairs:
        if value is None:
            lines.append(f"{key} none")
        elif isinstance(value, float):
            lines.append(f"{key} {value!r}")
        else:
            lines.append(f"{key} {value}")
    return "\n".join(lines) + "\n"


_COMMANDS = {
    "dsep": _cmd_dsep,
    "check": _cmd_check,
    "fit": _cmd_fit,
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _DOMAIN_ERRORS as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
