#!/usr/bin/env python3
"""
ntest - fat-tail normality testing from the command line.

Commands:
    test        run N, N1, N2, N3, JB, AD and SW on one sample file
    calibrate   simulate null critical values and cache them on disk
    power       rejection rates on symmetric alternatives
    unique      unique rejection ratios of JB, AD, SW and right-sided N
    returns     total and unique rejection ratios on market return series
    constants   the balance ratio, the normalising constant and block moments

Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from config import StudyConfig, settings
from experiments.calibration import CalibrationStore
from experiments.market import ReturnsMode, load_series, log_returns, returns_study
from experiments.power import power_study, unique_rejection_study
from experiments.registry import (
    FAT_TAIL_TESTS,
    SLIM_TAIL_TESTS,
    UNIQUE_TESTS,
    Statistic,
    TestName,
    statistics_for,
)
from experiments.runner import MonteCarloRunner
from normality.distributions import (
    FAT_TAILED_SPECS,
    SLIM_TAILED_SPECS,
    UNIQUE_SPECS,
    parse_spec,
)
from normality.empirical import (
    Denominator,
    EstimatorConfig,
    IndexMode,
    PartitionRatio,
    Sample,
)
from normality.errors import InputError, NTestError
from normality.normal_math import solve_qtilde
from normality.nstat import (
    CriticalSource,
    Side,
    TestOutcome,
    n1_statistic,
    n2_statistic,
    n3_tail_statistic,
    n_statistic,
    n_test,
    tail_test,
)
from normality.reference_tests import (
    MAX_SHAPIRO_SAMPLE,
    RefTestKind,
    anderson_darling,
    jarque_bera,
    reference_test,
    shapiro_wilk,
)
from normality.truncated_moments import (
    lambda_tail,
    lmr_partitions,
    rho,
    rho_by_quadrature,
    trunc_moments,
    variance_gap,
)
from utils.constants import (
    DEFAULT_LEVELS,
    DEFAULT_SAMPLE_SIZES,
    EXIT_INTERNAL_ERROR,
    EXIT_OK,
    EXIT_USAGE_ERROR,
    FILE_EXTENSION_CSV,
    FILE_EXTENSION_JSON,
    STUDY_FILE_PATTERN,
)
from utils.helpers import configure_logging, get_file_timestamp
from utils.reporting import (
    format_calibration_table,
    format_market_table,
    format_power_table,
    format_unique_table,
    print_final_report,
    print_table,
    rows_to_frame,
    rows_to_json,
    write_rows,
)

logger = logging.getLogger("ntest")

_DENOMINATORS = {"m": Denominator.M, "m-1": Denominator.M_MINUS_1}
_QUANTILE_MODES = {"floor": IndexMode.FLOOR_INDEX, "type7": IndexMode.R_TYPE7_QUANTILE}
_RATIOS = {"qtilde": PartitionRatio.EXACT_QTILDE, "0.2": PartitionRatio.ROUNDED_20}
_SIDES = {"left": Side.LEFT, "right": Side.RIGHT, "two-sided": Side.TWO_SIDED}
_GRIDS = {
    "fat": (FAT_TAILED_SPECS, FAT_TAIL_TESTS),
    "slim": (SLIM_TAILED_SPECS, SLIM_TAIL_TESTS),
}
_REFERENCE_SIDES = {
    Statistic.JB: TestName.JB.side,
    Statistic.AD: TestName.AD.side,
    Statistic.SW: TestName.SW.side,
}


# Argument parsing


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.seed, help="master seed")
    common.add_argument("--reps", type=int, default=None, help="Monte Carlo replications")
    common.add_argument("--n", type=int, nargs="+", default=None, help="sample sizes")
    common.add_argument("--level", type=float, nargs="+", default=None, help="test levels")
    common.add_argument("--side", choices=sorted(_SIDES), default="right")
    common.add_argument("--format", choices=["text", "json", "csv"], default="text")
    common.add_argument("--denominator", choices=sorted(_DENOMINATORS), default="m")
    common.add_argument("--quantile-mode", choices=sorted(_QUANTILE_MODES), default="floor")
    common.add_argument("--ratio", choices=sorted(_RATIOS), default="qtilde")
    common.add_argument("--jobs", type=int, default=settings.jobs, help="worker processes")
    common.add_argument("--calibration-dir", default=settings.calibration_dir)
    common.add_argument("--output", default=settings.output_directory, help="output directory")
    common.add_argument("--log-level", default=settings.log_level)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="ntest", description="Fat-tail normality testing")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", parents=[common], help="test one sample file")
    p_test.add_argument("input", help="CSV file, one value per line or a value column")
    p_test.add_argument("--column", default=None, help="value column name or index")
    p_test.add_argument(
        "--source", choices=["asymptotic", "calibrated"], default="asymptotic"
    )

    p_cal = sub.add_parser("calibrate", parents=[common], help="simulate null thresholds")
    p_cal.add_argument(
        "--statistics",
        nargs="+",
        choices=[s.value for s in Statistic],
        default=["N", "JB", "AD", "SW"],
    )

    for name, helptext in (("power", "power table"), ("unique", "unique rejections")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--spec", nargs="+", default=None, help="e.g. logistic t(5) gn(2.5)")
        p.add_argument("--standardize", action="store_true", help="unit-variance alternatives")
        p.add_argument("--calibration-reps", type=int, default=settings.calibration_reps)
        p.add_argument("--calibrate", action="store_true", help="simulate missing thresholds")
        if name == "power":
            p.add_argument("--grid", choices=sorted(_GRIDS), default="fat")
            p.add_argument("--tests", nargs="+", choices=[t.value for t in TestName])

    p_ret = sub.add_parser("returns", parents=[common], help="market return study")
    p_ret.add_argument("inputs", nargs="+", help="CSV files, one series per file")
    p_ret.add_argument("--column", default=None, help="value column name or index")
    p_ret.add_argument("--prices", action="store_true", help="inputs hold prices, not returns")
    p_ret.add_argument(
        "--returns-mode", choices=[m.value for m in ReturnsMode], default="log"
    )
    p_ret.add_argument("--calibration-reps", type=int, default=settings.calibration_reps)
    p_ret.add_argument("--calibrate", action="store_true", help="simulate missing thresholds")

    sub.add_parser("constants", parents=[common], help="print analytic constants")
    return parser


def estimator_config(args: argparse.Namespace) -> EstimatorConfig:
    return EstimatorConfig(
        denominator=_DENOMINATORS[args.denominator],
        index_mode=_QUANTILE_MODES[args.quantile_mode],
        partition_ratio=_RATIOS[args.ratio],
    )


def validate_args(args: argparse.Namespace) -> None:
    """Reject bad flag values before any computation."""
    for level in args.level or ():
        if not 0.0 < level < 1.0:
            raise InputError(f"--level must be in (0, 1), got {level}")
    for n in args.n or ():
        if n < 1:
            raise InputError(f"--n must be positive, got {n}")
    if args.reps is not None and args.reps < 1:
        raise InputError(f"--reps must be positive, got {args.reps}")
    if args.jobs < 1:
        raise InputError(f"--jobs must be positive, got {args.jobs}")
    if getattr(args, "calibration_reps", 1) < 1:
        raise InputError("--calibration-reps must be positive")
    if not isinstance(logging.getLevelName(args.log_level.upper()), int):
        raise InputError(f"unknown --log-level {args.log_level!r}")


# Output


def _emit(payload: Any, fmt: str, text: str, frame: Optional[pd.DataFrame] = None) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    elif fmt == "csv":
        frame = frame if frame is not None else pd.json_normalize(payload)
        print(frame.to_csv(index=False), end="")
    else:
        print(text)


def _study_path(args: argparse.Namespace, study: str) -> str:
    extension = FILE_EXTENSION_JSON if args.format == "json" else FILE_EXTENSION_CSV
    name = STUDY_FILE_PATTERN.format(
        study=study, timestamp=get_file_timestamp(), extension=extension
    )
    return str(Path(args.output) / name)


def _save_study(args: argparse.Namespace, study: str, rows: Sequence[Any], text: str) -> None:
    path = write_rows(rows, _study_path(args, study), "json" if args.format == "json" else "csv")
    if args.format == "json":
        print(rows_to_json(rows))
    elif args.format == "csv":
        print(rows_to_frame(rows).to_csv(index=False), end="")
    else:
        print_table(f"{study} [{estimator_config(args).describe()}]", text)
        print_final_report(study, len(rows), str(path))


# Commands


def _outcome_record(name: str, outcome: TestOutcome) -> Dict[str, Any]:
    record = {"test": name}
    record.update(outcome.model_dump(mode="json"))
    return record


def cmd_test(args: argparse.Namespace) -> int:
    cfg = estimator_config(args)
    sample = Sample(load_series(args.input, args.column).to_numpy())
    levels = args.level or [0.05]
    side = _SIDES[args.side]

    values = {
        "N": n_statistic(sample, cfg),
        "N1": n1_statistic(sample, cfg),
        "N2": n2_statistic(sample, cfg),
        "N3": n3_tail_statistic(sample, cfg),
        "JB": jarque_bera(sample),
        "AD": anderson_darling(sample),
    }
    with_sw = sample.n <= MAX_SHAPIRO_SAMPLE
    if with_sw:
        values["SW"] = shapiro_wilk(sample)

    decisions: List[Dict[str, Any]] = []
    if args.source == "asymptotic":
        for level in levels:
            decisions.append(_outcome_record("N", n_test(sample, side, level, cfg=cfg)))
            kinds = [RefTestKind.JB, RefTestKind.AD] + ([RefTestKind.SW] if with_sw else [])
            for kind in kinds:
                decisions.append(_outcome_record(kind.value, reference_test(kind, sample, level)))
    else:
        statistics = [
            Statistic.N,
            Statistic.N1,
            Statistic.N2,
            Statistic.N3,
            Statistic.JB,
            Statistic.AD,
        ]
        if with_sw:
            statistics.append(Statistic.SW)
        cals = CalibrationStore(args.calibration_dir).get_or_create(
            sample.n,
            args.reps or settings.test_calibration_reps,
            args.seed,
            statistics,
            cfg,
            MonteCarloRunner(jobs=args.jobs),
        )
        source = CriticalSource.CALIBRATED
        for level in levels:
            outcome = n_test(sample, side, level, source, cfg, cals[Statistic.N])
            decisions.append(_outcome_record("N", outcome))
            for stat in statistics[1:]:
                stat_side = _REFERENCE_SIDES.get(stat, side)
                outcome = tail_test(
                    values[stat.value],
                    sample.n,
                    stat_side,
                    level,
                    cals[stat],
                    name=stat.value,
                    config_key=stat.config_key(cfg),
                )
                decisions.append(_outcome_record(stat.value, outcome))

    payload = {
        "n": sample.n,
        "source": args.source,
        "estimator": cfg.model_dump(mode="json"),
        "statistics": values,
        "decisions": decisions,
    }
    lines = [
        f"n = {sample.n}, critical source: {args.source}",
        f"estimator: {cfg.describe()}",
    ]
    lines += [f"  {name:<3} = {value: .6f}" for name, value in values.items()]
    for d in decisions:
        verdict = "reject" if d["reject"] else "fail to reject"
        lines.append(
            f"  {d['test']:<3} {d['side']:<9} level {d['level']:<6g} "
            f"p = {d['p_value']:.4f}  {verdict}  [{d['critical_source']}]"
        )
    _emit(payload, args.format, "\n".join(lines), pd.DataFrame(decisions))
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = estimator_config(args)
    ns = args.n or list(DEFAULT_SAMPLE_SIZES)
    reps = args.reps or settings.calibration_reps
    statistics = [Statistic(s) for s in args.statistics]
    logger.info("run estimate: %s", StudyConfig(reps, ns, jobs=args.jobs).get_run_estimate())

    store = CalibrationStore(args.calibration_dir)
    runner = MonteCarloRunner(jobs=args.jobs)
    summaries = []
    for n in ns:
        cals = store.get_or_create(n, reps, args.seed, statistics, cfg, runner)
        summaries.extend(cals[s].to_summary(args.level or DEFAULT_LEVELS) for s in statistics)

    text = "\n\n".join(
        f"{side} tail\n{format_calibration_table(summaries, side)}" for side in ("right", "left")
    )
    _emit(summaries, args.format, text)
    return EXIT_OK


def _specs(args: argparse.Namespace, default: Sequence[Any]) -> List[Any]:
    if not args.spec:
        return [s.standardize() if args.standardize else s for s in default]
    return [parse_spec(text, standardized=args.standardize) for text in args.spec]


def _book(args: argparse.Namespace, ns: Sequence[int], tests: Sequence[TestName], runner):
    return CalibrationStore(args.calibration_dir).book(
        ns,
        args.calibration_reps,
        args.seed,
        statistics_for(tests),
        estimator_config(args),
        runner,
        create=args.calibrate,
    )


def cmd_power(args: argparse.Namespace) -> int:
    grid_specs, grid_tests = _GRIDS[args.grid]
    specs = _specs(args, grid_specs)
    tests = [TestName(t) for t in args.tests] if args.tests else list(grid_tests)
    ns = args.n or list(DEFAULT_SAMPLE_SIZES)
    levels = args.level or [0.05]
    reps = args.reps or settings.power_reps
    runner = MonteCarloRunner(jobs=args.jobs)
    estimate = StudyConfig(reps, ns, cells=len(specs), jobs=args.jobs)
    logger.info("run estimate: %s", estimate.get_run_estimate())

    book = _book(args, ns, tests, runner)
    rows = power_study(
        specs, ns, levels, book, tests, reps, args.seed, estimator_config(args), runner
    )
    _save_study(args, "power", rows, format_power_table(rows))
    return EXIT_OK


def cmd_unique(args: argparse.Namespace) -> int:
    specs = _specs(args, UNIQUE_SPECS)
    ns = args.n or [100, 250]
    level = (args.level or [0.05])[0]
    reps = args.reps or settings.power_reps
    runner = MonteCarloRunner(jobs=args.jobs)

    book = _book(args, ns, UNIQUE_TESTS, runner)
    rows = unique_rejection_study(
        specs, ns, level, book, UNIQUE_TESTS, reps, args.seed, estimator_config(args), runner
    )
    _save_study(args, "unique", rows, format_unique_table(rows))
    return EXIT_OK


def cmd_returns(args: argparse.Namespace) -> int:
    series = {}
    for path in args.inputs:
        values = load_series(path, args.column)
        key = values.name if values.name not in series else path
        series[key] = (
            log_returns(values.to_numpy(), ReturnsMode(args.returns_mode))
            if args.prices
            else values.to_numpy()
        )
    ns = args.n or [100, 250]
    levels = args.level or list(DEFAULT_LEVELS)

    book = _book(args, ns, UNIQUE_TESTS, MonteCarloRunner(jobs=args.jobs))
    study = returns_study(series, ns, levels, book, UNIQUE_TESTS, estimator_config(args))
    _save_study(args, "returns", study.rows, format_market_table(study.rows))
    if study.skipped and args.format == "text":
        print(f"⚠️ {len(study.skipped)} series/length pair(s) skipped")
    return EXIT_OK


def constants_payload() -> Dict[str, Any]:
    qt = solve_qtilde()
    blocks = {}
    for name, p in zip("LMR", lmr_partitions(qt.value)):
        tm = trunc_moments(p)
        blocks[name] = {
            "alpha": p.alpha,
            "beta": p.beta,
            "mu_tilde": tm.mu_tilde,
            "sigma2_tilde": tm.sigma2_tilde,
            "kappa_tilde": tm.kappa_tilde,
        }
    return {
        "qtilde": qt.value,
        "qtilde_root": qt.root,
        "rho": rho(),
        "rho_quadrature": rho_by_quadrature(),
        "lambda_tail": lambda_tail(),
        "rounded_variance_gap": variance_gap(0.2),
        "blocks": blocks,
    }


def cmd_constants(args: argparse.Namespace) -> int:
    payload = constants_payload()
    lines = [
        f"q~                 = {payload['qtilde']:.15f}",
        f"Phi^-1(q~)         = {payload['qtilde_root']:.15f}",
        f"rho                = {payload['rho']:.15f}",
        f"rho (quadrature)   = {payload['rho_quadrature']:.15f}",
        f"lambda             = {payload['lambda_tail']:.15f}",
        f"gap at ratio 0.2   = {payload['rounded_variance_gap']:.15f}",
    ]
    for name, block in payload["blocks"].items():
        lines.append(
            f"{name}: [{block['alpha']:.6f}, {block['beta']:.6f}]  "
            f"mu~ = {block['mu_tilde']: .15f}  sigma2~ = {block['sigma2_tilde']:.15f}  "
            f"kappa~ = {block['kappa_tilde']:.15f}"
        )
    _emit(payload, args.format, "\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "calibrate": cmd_calibrate,
    "power": cmd_power,
    "unique": cmd_unique,
    "returns": cmd_returns,
    "constants": cmd_constants,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE_ERROR

    try:
        validate_args(args)
        configure_logging(args.log_level, settings.log_file)
        return COMMANDS[args.command](args)
    except (NTestError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
