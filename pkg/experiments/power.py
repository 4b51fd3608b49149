"""
Power and unique-rejection studies against calibrated thresholds.

Every (alternative, n) cell simulates its samples once; all tests and
levels are judged on the same draws. Chunks return rejection counts only,
so the reduction is a sum and does not depend on chunk order.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from experiments.calibration import CalibrationBook
from experiments.registry import (
    FAT_TAIL_TESTS,
    UNIQUE_TESTS,
    Statistic,
    TestName,
    evaluate_all,
    rejection_mask,
    statistics_for,
)
from experiments.runner import MonteCarloRunner, stream_key
from normality.distributions import AlternativeSpec, draw, make_rng
from normality.empirical import DEFAULT_CONFIG, EstimatorConfig
from normality.errors import InputError
from normality.nstat import Side
from utils.constants import MSG_COMPLETED, MSG_STARTING
from utils.helpers import mc_stderr

logger = logging.getLogger(__name__)

# (statistic, side, critical values)
Cell = Tuple[Statistic, Side, Tuple[float, ...]]


class PowerRow(BaseModel):
    """Rejection rate of one test on one alternative at one (n, level)."""

    model_config = ConfigDict(frozen=True)

    spec: str
    n: int
    test: TestName
    level: float
    reps: int
    rejection_rate: float
    mc_stderr: float

    @classmethod
    def from_count(
        cls, spec: str, n: int, test: TestName, level: float, reps: int, count: int
    ) -> "PowerRow":
        rate = count / reps
        return cls(
            spec=spec,
            n=n,
            test=test,
            level=level,
            reps=reps,
            rejection_rate=rate,
            mc_stderr=mc_stderr(rate, reps),
        )


class UniqueRejectionRow(BaseModel):
    """Total and unique rejection ratios of a group of tests on one alternative."""

    model_config = ConfigDict(frozen=True)

    spec: str
    n: int
    level: float
    reps: int
    total: Dict[str, float]
    unique: Dict[str, float]


def _check_reps(reps: int) -> None:
    if reps < 1:
        raise InputError(f"reps must be >= 1, got {reps}")


def _power_chunk(
    size: int,
    seed: np.random.SeedSequence,
    spec: AlternativeSpec,
    n: int,
    statistics: Sequence[Statistic],
    cells: Sequence[Cell],
    cfg: EstimatorConfig,
) -> np.ndarray:
    batch = draw(spec, (size, n), make_rng(seed))
    values = evaluate_all(batch, statistics, cfg)
    return np.array(
        [rejection_mask(values[stat], side, crit).sum() for stat, side, crit in cells],
        dtype=np.int64,
    )


def power_study(
    specs: Iterable[AlternativeSpec],
    ns: Iterable[int],
    levels: Iterable[float],
    book: CalibrationBook,
    tests: Sequence[TestName] = FAT_TAIL_TESTS,
    reps: int = 200_000,
    seed: int = 0,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
    runner: Optional[MonteCarloRunner] = None,
) -> List[PowerRow]:
    """Fraction of ``reps`` samples each test rejects, per (spec, n, level, test).

    Raises:
        MissingCalibration: If ``book`` lacks a threshold some cell needs.
    """
    _check_reps(reps)
    runner = runner or MonteCarloRunner()
    specs, ns, levels, tests = list(specs), list(ns), list(levels), list(tests)
    statistics = statistics_for(tests)

    # resolve every threshold before simulating anything
    layout: Dict[int, List[Tuple[TestName, float, Cell]]] = {}
    for n in ns:
        layout[n] = [
            (
                test,
                level,
                (
                    test.statistic,
                    test.side,
                    book.critical_values(test.statistic, n, test.side, level, cfg),
                ),
            )
            for level in levels
            for test in tests
        ]

    logger.info(MSG_STARTING.format(study="power study"))
    rows: List[PowerRow] = []
    for spec in specs:
        for n in ns:
            cells = [cell for _, _, cell in layout[n]]
            counts = sum(
                runner.run(
                    _power_chunk,
                    reps,
                    seed,
                    stream_key("power", spec.label, int(spec.standardized), n),
                    args=(spec, n, statistics, cells, cfg),
                    label=f"power {spec.label} n={n}",
                )
            )
            for (test, level, _), count in zip(layout[n], counts):
                rows.append(
                    PowerRow.from_count(spec.label, n, test, level, reps, int(count))
                )
    logger.info(MSG_COMPLETED.format(study="power study"))
    return rows


def tally_rejections(masks: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    """Per-test totals, per-test unique counts and the any-test count.

    ``masks`` is (tests x samples) boolean; a sample counts as unique for a
    test when that test is the only one rejecting it.
    """
    masks = np.asarray(masks, dtype=bool)
    total = masks.sum(axis=1)
    only_one = masks.sum(axis=0) == 1
    unique = (masks & only_one[None, :]).sum(axis=1)
    return total, unique, int(masks.any(axis=0).sum())


def _unique_chunk(
    size: int,
    seed: np.random.SeedSequence,
    spec: AlternativeSpec,
    n: int,
    statistics: Sequence[Statistic],
    cells: Sequence[Cell],
    cfg: EstimatorConfig,
) -> np.ndarray:
    batch = draw(spec, (size, n), make_rng(seed))
    values = evaluate_all(batch, statistics, cfg)
    masks = np.array(
        [rejection_mask(values[stat], side, crit) for stat, side, crit in cells]
    )
    total, unique, _ = tally_rejections(masks)
    return np.concatenate([total, unique]).astype(np.int64)


def unique_rejection_study(
    specs: Iterable[AlternativeSpec],
    ns: Iterable[int],
    level: float,
    book: CalibrationBook,
    tests: Sequence[TestName] = UNIQUE_TESTS,
    reps: int = 200_000,
    seed: int = 0,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
    runner: Optional[MonteCarloRunner] = None,
) -> List[UniqueRejectionRow]:
    """Total and unique rejection ratios for ``tests`` run side by side.

    Raises:
        MissingCalibration: If ``book`` lacks a threshold some test needs.
    """
    _check_reps(reps)
    runner = runner or MonteCarloRunner()
    specs, ns, tests = list(specs), list(ns), list(tests)
    statistics = statistics_for(tests)
    k = len(tests)

    logger.info(MSG_STARTING.format(study="unique rejection study"))
    rows: List[UniqueRejectionRow] = []
    for n in ns:
        cells = [
            (
                t.statistic,
                t.side,
                book.critical_values(t.statistic, n, t.side, level, cfg),
            )
            for t in tests
        ]
        for spec in specs:
            counts = sum(
                runner.run(
                    _unique_chunk,
                    reps,
                    seed,
                    stream_key("unique", spec.label, int(spec.standardized), n),
                    args=(spec, n, statistics, cells, cfg),
                    label=f"unique {spec.label} n={n}",
                )
            )
            rows.append(
                UniqueRejectionRow(
                    spec=spec.label,
                    n=n,
                    level=level,
                    reps=reps,
                    total={t.value: float(c) / reps for t, c in zip(tests, counts[:k])},
                    unique={t.value: float(c) / reps for t, c in zip(tests, counts[k:])},
                )
            )
    logger.info(MSG_COMPLETED.format(study="unique rejection study"))
    return rows
