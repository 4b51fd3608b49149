import numpy as np
import pytest

from experiments.calibration import CalibrationBook, calibrate_null
from experiments.registry import Statistic
from experiments.runner import MonteCarloRunner

BOOK_N = 100
BOOK_REPS = 20_000


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def serial_runner():
    return MonteCarloRunner(jobs=1, chunk_size=5_000)


@pytest.fixture(scope="session")
def small_book():
    """N, JB, AD and SW thresholds at n=100 from 20k null samples."""
    book = CalibrationBook()
    book.update(
        calibrate_null(
            BOOK_N,
            BOOK_REPS,
            seed=7,
            statistics=[Statistic.N, Statistic.JB, Statistic.AD, Statistic.SW],
            runner=MonteCarloRunner(jobs=1, chunk_size=5_000),
        )
    )
    return book
