"""Main CLI entry point."""
import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from config import Settings, load_config, settings as default_settings
from core import LCMError
from core.errors import NumericalError, UsageError
from core.types import ResponseMatrix
from modules.evaluation import align_columns, clustering_errors, mse
from modules.pipeline import METHOD_NAMES, fit_response_matrix, normalize_method_name
from modules.selection import select_L
from modules.simulate import (
    STRONG_POOL,
    SimDesign,
    consistency_designs,
    gen_responses,
    gen_truth,
    neighbor_candidates,
    grid_designs,
    run_benchmark,
    run_gic_benchmark,
    summarize_gic,
)
from tools.io_tools import (
    fit_payload,
    read_integer_table,
    read_parameters,
    read_responses,
    truth_payload,
    write_json,
    write_responses,
    write_table,
)
from tools.survey_tools import binarize_likert, profile_groups, read_groups, read_key
from utils import make_rng, setup_logging, spawn

logger = logging.getLogger("main")


def _pool(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"theta pool must be comma-separated numbers: {raw!r}") from e


def _design(args: argparse.Namespace, seed: int) -> SimDesign:
    if args.j < 3:
        raise UsageError(f"--j {args.j} is too small: J >= 3 items are required")
    try:
        return SimDesign(n_subjects=args.n, n_items=args.j, n_classes=args.l, theta_pool=args.theta_pool,
                         model=args.model, p_floor=args.p_floor, seed=seed)
    except ValidationError as e:
        raise UsageError(f"Invalid simulation design: {e}") from e


def _record_timing(args: argparse.Namespace, settings: Settings) -> bool:
    return settings.output.record_timing and not getattr(args, "no_timing", False)


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    design = _design(args, args.seed)
    truth_rng, data_rng = spawn(args.seed, 2)
    truth = gen_truth(design, truth_rng)
    R, _ = gen_responses(truth.theta, truth.membership, design.n_subjects, data_rng)
    write_responses(R, args.out)
    if args.truth:
        write_json(truth_payload(truth.model, truth.theta, truth.p, truth.z, args.seed), args.truth)
    return 0


def cmd_fit(args: argparse.Namespace, settings: Settings) -> int:
    method = normalize_method_name(args.method)
    if method == "em-init" and not args.init:
        raise UsageError("--method em-init needs --init (a truth or fit JSON)")
    if args.k_restarts is not None:
        spectral = settings.spectral.model_copy(update={"n_restarts": args.k_restarts})
        settings = settings.model_copy(update={"spectral": spectral})

    R = read_responses(args.data)
    init_theta = init_p = None
    if args.init:
        init = read_parameters(args.init)
        if init.n_classes != args.l:
            raise UsageError(f"--init has {init.n_classes} classes but --l is {args.l}")
        init_theta, init_p = init.theta, init.p
    fit = fit_response_matrix(R, args.l, method, args.model, make_rng(args.seed), settings,
                              init_theta=init_theta, init_p=init_p, restarts=args.restarts)
    payload = fit_payload(fit, _record_timing(args, settings))
    if args.out:
        write_json(payload, args.out)
    else:
        print(json.dumps(payload, indent=2))
    return 0


def cmd_select(args: argparse.Namespace, settings: Settings) -> int:
    if args.l_min < 1 or args.l_max < args.l_min:
        raise UsageError(f"Invalid candidate range {args.l_min}..{args.l_max}")
    R = read_responses(args.data)
    criterion = args.criterion or settings.selection.criterion
    report = select_L(R, list(range(args.l_min, args.l_max + 1)), args.model, criterion, settings,
                      make_rng(args.seed), args.jobs)
    if args.out:
        write_table(report.to_frame(), args.out)
    if report.selected_L is None:
        raise NumericalError("Every candidate fit failed; no number of classes selected")
    print(f"selected_L={report.selected_L}")
    return 0


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    truth = read_parameters(args.truth)
    est = read_parameters(args.est)
    perm, _ = align_columns(truth.theta, est.theta)
    result: dict[str, object] = {"mse": None, "n_errors": None, "error_rate": None}
    if args.metric in ("mse", "all"):
        result["mse"] = mse(truth.theta, est.theta)
    if args.metric in ("errors", "rate", "all") and truth.z is not None and est.z is not None:
        n_errors = clustering_errors(truth.z, est.z)
        if args.metric != "rate":
            result["n_errors"] = n_errors
        if args.metric != "errors":
            result["error_rate"] = n_errors / truth.z.n_subjects
    result["permutation"] = (perm + 1).tolist()
    print(json.dumps(result))
    return 0


def cmd_ingest(args: argparse.Namespace, settings: Settings) -> int:
    raw = read_integer_table(args.raw, has_header=args.has_header)
    binary = binarize_likert(raw, read_key(args.key))
    write_responses(ResponseMatrix(data=binary), args.out)
    return 0


def cmd_profile(args: argparse.Namespace, settings: Settings) -> int:
    est = read_parameters(args.est)
    profile = profile_groups(est.theta, read_groups(args.groups), args.mode)
    write_table(profile.labels.reset_index(), args.out)
    if args.means_out:
        write_table(profile.to_frame(), args.means_out)
    return 0


def _benchmark_designs(args: argparse.Namespace) -> list[SimDesign]:
    if args.grid == "full":
        return grid_designs(args.model, args.seed)
    if args.grid == "consistency":
        return consistency_designs(args.theta_pool, n_classes=args.l, seed=args.seed)
    return [_design(args, args.seed)]


def cmd_benchmark(args: argparse.Namespace, settings: Settings) -> int:
    designs = _benchmark_designs(args)
    reps = args.reps or settings.benchmark.reps
    threads = args.threads or settings.benchmark.threads
    logger.info(f"Benchmark ({args.kind}): {len(designs)} design(s) x {reps} replication(s)")
    if args.kind == "gic":
        table = run_gic_benchmark(designs, reps, neighbor_candidates, settings, threads)
        write_table(table, args.out)
        if args.summary:
            write_table(summarize_gic(table), args.summary)
        return 0
    methods = [m for m in args.methods.split(",") if m.strip()]
    table = run_benchmark(designs, methods, reps, settings, threads, _record_timing(args, settings))
    write_table(table, args.out)
    return 0


def _add_design_flags(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--n", type=int, required=required, default=1000, help="Number of subjects N")
    parser.add_argument("--j", type=int, required=required, default=100, help="Number of items J")
    parser.add_argument("--l", type=int, required=required, default=5, help="Number of classes L")
    parser.add_argument("--model", choices=["random", "fixed"], default="random")
    parser.add_argument("--theta-pool", type=_pool, default=STRONG_POOL, help="Comma-separated item parameter pool")
    parser.add_argument("--p-floor", type=float, default=None, help="Minimum class proportion (random model)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tensor-em", description="Tensor-EM for binary latent class models")
    parser.add_argument("--config", type=Path, default=None, help="YAML configuration file")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Simulate a response matrix")
    _add_design_flags(p, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="Response CSV")
    p.add_argument("--truth", default=None, help="Truth JSON")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("fit", help="Fit an L-class model")
    p.add_argument("--data", required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--model", choices=["random", "fixed"], default="random")
    p.add_argument("--method", default="tensor-em", help=f"One of {', '.join(METHOD_NAMES)}")
    p.add_argument("--init", default=None, help="Truth or fit JSON with starting values (em-init)")
    p.add_argument("--restarts", type=int, default=None, help="em-random starts")
    p.add_argument("--k-restarts", type=int, default=None, help="Tensor power-method restarts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="Fit JSON (stdout when omitted)")
    p.add_argument("--no-timing", action="store_true",
                   help="Write runtime_ms as 0 so reruns with the same seed give byte-identical files")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("select", help="Select the number of classes by GIC")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=["random", "fixed"], default="random")
    p.add_argument("--l-min", type=int, required=True)
    p.add_argument("--l-max", type=int, required=True)
    p.add_argument("--criterion", choices=["gic1", "gic2"], default=None)
    p.add_argument("--jobs", type=int, default=None, help="Candidate fits run in parallel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="GIC report CSV")
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser("eval", help="Compare an estimate with the truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--metric", choices=["mse", "errors", "rate", "all"], default="all")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("ingest", help="Binarize 1..7 Likert answers")
    p.add_argument("--raw", required=True)
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--key", required=True, help="CSV item_index,sign")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("profile", help="Label pooled item parameters per group and class")
    p.add_argument("--est", required=True)
    p.add_argument("--groups", required=True, help="CSV item_index,group")
    p.add_argument("--mode", choices=["absolute", "quantile"], default="absolute")
    p.add_argument("--out", required=True, help="Label grid CSV")
    p.add_argument("--means-out", default=None, help="Long table of means, labels and cuts")
    p.set_defaults(handler=cmd_profile)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison of methods or GIC accuracy")
    p.add_argument("--kind", choices=["methods", "gic"], default="methods")
    p.add_argument("--grid", choices=["single", "full", "consistency"], default="single")
    _add_design_flags(p, required=False)
    p.add_argument("--methods", default=",".join(METHOD_NAMES))
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="GIC accuracy summary CSV (--kind gic)")
    p.add_argument("--no-timing", action="store_true",
                   help="Write runtime_ms as 0 so reruns with the same seed give byte-identical files")
    p.set_defaults(handler=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = load_config(args.config) if args.config else default_settings
    except (FileNotFoundError, ValueError) as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return UsageError.exit_code
    setup_logging(args.log_level or settings.logging.level, settings.logging)

    try:
        return args.handler(args, settings)
    except LCMError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ {e}", file=sys.stderr)
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
