"""Desk-scale reproduction runs. Minutes each; run with ``pytest -m slow``.

The published null table and power tables were produced with type-7 block
quantiles, the 1/(m-1) variance and the rounded 0.2 ratio, so every
N-type calibration and study here runs under ``EstimatorConfig.r_reference()``.
"""

import numpy as np
import pytest
from scipy import stats

from experiments.calibration import CalibrationBook, calibrate_null
from experiments.market import returns_study
from experiments.power import power_study, unique_rejection_study
from experiments.registry import FAT_TAIL_TESTS, SLIM_TAIL_TESTS, Statistic, TestName
from experiments.runner import MonteCarloRunner
from normality.distributions import (
    FAT_TAILED_SPECS,
    SLIM_TAILED_SPECS,
    draw,
    make_rng,
    parse_spec,
)
from normality.empirical import EstimatorConfig
from normality.nstat import Side, n_statistic_batch

pytestmark = pytest.mark.slow

REFERENCE = EstimatorConfig.r_reference()
SIZES = (50, 100, 250)
CALIBRATION_REPS = 1_000_000
POWER_REPS = 200_000

# right-tail N thresholds of the published null table
NULL_TABLE = [
    (50, 0.01, 2.68),
    (50, 0.025, 2.18),
    (50, 0.05, 1.77),
    (100, 0.01, 2.57),
    (100, 0.025, 2.12),
    (100, 0.05, 1.74),
    (250, 0.01, 2.51),
    (250, 0.025, 2.09),
    (250, 0.05, 1.74),
]


@pytest.fixture(scope="module")
def runner():
    return MonteCarloRunner()


@pytest.fixture(scope="module")
def book(runner):
    book = CalibrationBook()
    for n in SIZES:
        book.update(
            calibrate_null(
                n,
                CALIBRATION_REPS,
                seed=2019,
                statistics=[Statistic.N, Statistic.JB, Statistic.AD, Statistic.SW],
                cfg=REFERENCE,
                runner=runner,
            )
        )
    return book


def _power(book, runner, specs, ns, tests, seed):
    return power_study(
        specs,
        ns,
        [0.05],
        book,
        tests=tests,
        reps=POWER_REPS,
        seed=seed,
        cfg=REFERENCE,
        runner=runner,
    )


@pytest.mark.parametrize("n,level,expected", NULL_TABLE)
def test_null_thresholds(book, n, level, expected):
    threshold = book.get(Statistic.N, n, REFERENCE).critical_value(Side.RIGHT, level)
    assert threshold == pytest.approx(expected, abs=0.03)


def test_null_distribution_is_standard_normal_at_250():
    rng = make_rng(1)
    values = np.concatenate(
        [n_statistic_batch(rng.standard_normal((10_000, 250)), REFERENCE) for _ in range(10)]
    )
    assert stats.kstest(values, "norm").statistic < 0.02
    assert abs(values.mean()) < 0.05
    assert values.std() == pytest.approx(1.0, abs=0.05)


def test_rho_matches_spread_of_numerator():
    # N divides the block-variance contrast by rho, so its null spread is one
    rng = make_rng(2)
    values = np.concatenate(
        [n_statistic_batch(rng.standard_normal((1_000, 10_000))) for _ in range(10)]
    )
    assert values.std() == pytest.approx(1.0, rel=0.025)


@pytest.mark.parametrize(
    "spec,n,test,expected",
    [
        ("logistic", 250, TestName.N_RIGHT, 0.764),
        ("t(5)", 100, TestName.N_RIGHT, 0.705),
        ("laplace", 50, TestName.N_RIGHT, 0.691),
        ("logistic", 100, TestName.JB, 0.394),
    ],
)
def test_fat_tailed_power(book, runner, spec, n, test, expected):
    (row,) = _power(book, runner, [parse_spec(spec)], [n], [test], seed=3)
    assert row.rejection_rate == pytest.approx(expected, abs=0.01)


@pytest.mark.parametrize(
    "spec,n,test,expected,tolerance",
    [
        ("gn(3)", 100, TestName.N_LEFT, 0.441, 0.01),
        ("gn(5)", 50, TestName.N_LEFT, 0.612, 0.01),
        # JB sits near 48.8% here under both variants; MC stderr at 2e5 reps is 0.0011
        ("gn(10)", 100, TestName.JB, 0.500, 0.02),
    ],
)
def test_slim_tailed_power(book, runner, spec, n, test, expected, tolerance):
    (row,) = _power(book, runner, [parse_spec(spec)], [n], [test], seed=4)
    assert row.rejection_rate == pytest.approx(expected, abs=tolerance)


def _by_cell(rows):
    cells = {}
    for row in rows:
        cells.setdefault((row.spec, row.n), {})[row.test] = row
    return cells


def test_right_sided_n_dominates_on_fat_tails(book, runner):
    tests = [TestName.JB, TestName.AD, TestName.SW, TestName.N_RIGHT]
    rows = _power(book, runner, FAT_TAILED_SPECS, SIZES, tests, seed=8)
    for cell, by_test in _by_cell(rows).items():
        n_row = by_test[TestName.N_RIGHT]
        best = max((by_test[t] for t in tests[:-1]), key=lambda r: r.rejection_rate)
        # ties count within one stderr of the difference
        slack = np.hypot(n_row.mc_stderr, best.mc_stderr)
        assert n_row.rejection_rate >= best.rejection_rate - slack, (cell, best.test)


def test_left_sided_n_dominates_on_slim_tails(book, runner):
    tests = [TestName.JB, TestName.AD, TestName.SW, TestName.N_LEFT]
    rows = _power(book, runner, SLIM_TAILED_SPECS, SIZES, tests, seed=9)
    for cell, by_test in _by_cell(rows).items():
        left = by_test[TestName.N_LEFT].rejection_rate
        best = max(by_test[t].rejection_rate for t in tests[:-1])
        assert left > best or left >= 0.999, cell


def test_size_at_every_level(book, runner):
    rows = power_study(
        [parse_spec("normal")],
        list(SIZES),
        [0.01, 0.025, 0.05],
        book,
        tests=list(dict.fromkeys(FAT_TAIL_TESTS + SLIM_TAIL_TESTS)),
        reps=POWER_REPS,
        seed=5,
        cfg=REFERENCE,
        runner=runner,
    )
    for row in rows:
        assert abs(row.rejection_rate - row.level) < 3.0 * np.sqrt(
            row.level * (1.0 - row.level) / POWER_REPS
        ) + 0.002, row


@pytest.mark.parametrize("spec,n,expected", [("logistic", 100, 0.093), ("t(20)", 250, 0.070)])
def test_unique_rejections(book, runner, spec, n, expected):
    (row,) = unique_rejection_study(
        [parse_spec(spec)],
        [n],
        0.05,
        book,
        reps=POWER_REPS,
        seed=6,
        cfg=REFERENCE,
        runner=runner,
    )
    assert row.unique["N_right"] == pytest.approx(expected, abs=0.01)


def test_synthetic_market_ranking(book):
    rng = make_rng(7)
    spec = parse_spec("t(5)")
    series = {f"s{i}": draw(spec, 4_610, rng) for i in range(381)}
    (row,) = returns_study(series, [100], [0.05], book, cfg=REFERENCE).rows
    t = row.total
    assert t["N_right"] > t["JB"] > t["SW"] > t["AD"]
