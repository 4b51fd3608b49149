import math

import numpy as np
import pytest

from experiments.calibration import CalibrationBook, calibrate_null
from experiments.power import (
    PowerRow,
    power_study,
    tally_rejections,
    unique_rejection_study,
)
from experiments.registry import Statistic, TestName
from experiments.runner import MonteCarloRunner
from normality.distributions import parse_spec
from normality.errors import InputError, MissingCalibration

LAPLACE = parse_spec("laplace")


def test_row_from_count():
    row = PowerRow.from_count("Laplace", 100, TestName.N_RIGHT, 0.05, 400, 100)
    assert row.rejection_rate == 0.25
    assert row.mc_stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 400))


def test_empty_book_fails_before_simulating(serial_runner):
    with pytest.raises(MissingCalibration):
        power_study([LAPLACE], [100], [0.05], CalibrationBook(), reps=100, runner=serial_runner)


def test_reps_must_be_positive(small_book):
    with pytest.raises(InputError):
        power_study([LAPLACE], [100], [0.05], small_book, reps=0)


def test_deterministic_and_independent_of_jobs(small_book):
    def run(jobs):
        return power_study(
            [LAPLACE],
            [100],
            [0.05],
            small_book,
            tests=[TestName.N_RIGHT, TestName.JB],
            reps=3_000,
            seed=11,
            runner=MonteCarloRunner(jobs, 1_000),
        )

    a, b, c = run(1), run(1), run(2)
    assert a == b == c


def test_layout_of_rows(small_book, serial_runner):
    rows = power_study(
        [LAPLACE, parse_spec("t(5)")],
        [100],
        [0.01, 0.05],
        small_book,
        reps=500,
        runner=serial_runner,
    )
    assert len(rows) == 2 * 2 * 5
    assert {row.spec for row in rows} == {"Laplace", "t(5)"}
    for row in rows:
        assert 0.0 <= row.rejection_rate <= 1.0


def test_fat_tailed_power(small_book, serial_runner):
    rows = power_study(
        [LAPLACE],
        [100],
        [0.05],
        small_book,
        tests=[TestName.N_RIGHT],
        reps=4_000,
        runner=serial_runner,
    )
    assert rows[0].rejection_rate > 0.5


def test_slim_tailed_power(serial_runner):
    book = CalibrationBook()
    book.update(calibrate_null(100, 10_000, seed=8, statistics=[Statistic.N], runner=serial_runner))
    rows = power_study(
        [parse_spec("gn(10)")],
        [100],
        [0.05],
        book,
        tests=[TestName.N_LEFT],
        reps=4_000,
        runner=serial_runner,
    )
    assert rows[0].rejection_rate > 0.8


class TestTally:
    def test_hand_masks(self):
        masks = np.array([[1, 1, 0, 0], [0, 1, 1, 0]], dtype=bool)
        total, unique, any_count = tally_rejections(masks)
        np.testing.assert_array_equal(total, [2, 2])
        np.testing.assert_array_equal(unique, [1, 1])
        assert any_count == 3

    def test_single_test_unique_is_total(self):
        masks = np.array([[1, 0, 1, 1]], dtype=bool)
        total, unique, any_count = tally_rejections(masks)
        assert total[0] == unique[0] == any_count == 3


def test_unique_rejection_study(small_book, serial_runner):
    rows = unique_rejection_study(
        [LAPLACE, parse_spec("t(20)")], [100], 0.05, small_book, reps=2_000, runner=serial_runner
    )
    assert len(rows) == 2
    for row in rows:
        assert set(row.total) == {"JB", "AD", "SW", "N_right"}
        for name, total in row.total.items():
            assert 0.0 <= row.unique[name] <= total <= 1.0
