"""
Statistics the harness can simulate, and the tests built on them.

A :class:`Statistic` is a batch function of a (replications x n) array. A
:class:`TestName` pairs a statistic with the side on which it rejects:
JB and AD reject for large values, SW for small values, and N on whichever
side is asked for.
"""

from __future__ import annotations

from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from normality.empirical import EstimatorConfig
from normality.nstat import (
    Side,
    n1_statistic_batch,
    n2_statistic_batch,
    n3_tail_batch,
    n_statistic_batch,
)
from normality.reference_tests import (
    anderson_darling_batch,
    jarque_bera_batch,
    shapiro_wilk_batch,
)


class Statistic(str, Enum):
    N = "N"
    N1 = "N1"
    N2 = "N2"
    N3 = "N3"
    JB = "JB"
    AD = "AD"
    SW = "SW"

    @property
    def uses_estimator(self) -> bool:
        """True when the value depends on the conditional-variance estimator."""
        return self in (Statistic.N, Statistic.N1, Statistic.N2, Statistic.N3)

    def config_key(self, cfg: EstimatorConfig) -> str:
        return cfg.config_hash() if self.uses_estimator else "reference"

    def evaluate(self, batch: np.ndarray, cfg: EstimatorConfig) -> np.ndarray:
        if self is Statistic.N:
            return n_statistic_batch(batch, cfg)
        if self is Statistic.N1:
            return n1_statistic_batch(batch, cfg)
        if self is Statistic.N2:
            return n2_statistic_batch(batch, cfg)
        if self is Statistic.N3:
            return n3_tail_batch(batch, cfg)
        if self is Statistic.JB:
            return jarque_bera_batch(batch)
        if self is Statistic.AD:
            return anderson_darling_batch(batch)
        return shapiro_wilk_batch(batch)


class TestName(str, Enum):
    __test__ = False  # not a pytest class

    JB = "JB"
    AD = "AD"
    SW = "SW"
    N_TWO = "N_two"
    N_RIGHT = "N_right"
    N_LEFT = "N_left"

    @property
    def statistic(self) -> Statistic:
        return _TESTS[self][0]

    @property
    def side(self) -> Side:
        return _TESTS[self][1]


_TESTS: Dict[TestName, Tuple[Statistic, Side]] = {
    TestName.JB: (Statistic.JB, Side.RIGHT),
    TestName.AD: (Statistic.AD, Side.RIGHT),
    TestName.SW: (Statistic.SW, Side.LEFT),
    TestName.N_TWO: (Statistic.N, Side.TWO_SIDED),
    TestName.N_RIGHT: (Statistic.N, Side.RIGHT),
    TestName.N_LEFT: (Statistic.N, Side.LEFT),
}

FAT_TAIL_TESTS = (TestName.JB, TestName.AD, TestName.SW, TestName.N_TWO, TestName.N_RIGHT)
SLIM_TAIL_TESTS = (TestName.JB, TestName.AD, TestName.SW, TestName.N_TWO, TestName.N_LEFT)
UNIQUE_TESTS = (TestName.JB, TestName.AD, TestName.SW, TestName.N_RIGHT)


def statistics_for(tests: Iterable[TestName]) -> List[Statistic]:
    """Distinct statistics needed by ``tests``, in first-seen order."""
    seen: List[Statistic] = []
    for test in tests:
        if test.statistic not in seen:
            seen.append(test.statistic)
    return seen


def evaluate_all(
    batch: np.ndarray, statistics: Sequence[Statistic], cfg: EstimatorConfig
) -> Dict[Statistic, np.ndarray]:
    return {stat: stat.evaluate(batch, cfg) for stat in statistics}


def rejection_mask(values: np.ndarray, side: Side, critical: Sequence[float]) -> np.ndarray:
    """Vectorised form of :func:`normality.nstat.rejects`."""
    if side is Side.RIGHT:
        return values > critical[-1]
    if side is Side.LEFT:
        return values < critical[0]
    return (values < critical[0]) | (values > critical[-1])
