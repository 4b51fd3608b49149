"""
The N statistic and its tail-impact relatives.

    N  = (1/rho) ((s2_L - s2_M)/s2 + (s2_R - s2_M)/s2) sqrt(n)
    N1 = sqrt(n) (s2_L - s2_M) / s2
    N2 = sqrt(n) (s2_L - s2_M) / s2_M
    N3 = sqrt(n) (s2_A / s2_B - lambda)

Large positive N points to fat tails, large negative N to slim tails.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from normality.empirical import (
    DEFAULT_CONFIG,
    EstimatorConfig,
    Sample,
    block_variances_batch,
    conditional_moments_batch,
)
from normality.errors import DegenerateVariance, DomainError, MissingCalibration
from normality.normal_math import std_normal_cdf, std_normal_quantile
from normality.truncated_moments import FULL, Partition, lambda_tail, rho

logger = logging.getLogger(__name__)

CALIBRATED_LEVELS = (0.01, 0.025, 0.05)
LOWER_TAIL = Partition(0.0, 0.2)


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    TWO_SIDED = "two_sided"


class CriticalSource(str, Enum):
    ASYMPTOTIC_NORMAL = "asymptotic_normal"
    CALIBRATED = "calibrated"


class CriticalTable(Protocol):
    """What a test needs from a null calibration."""

    n: int

    @property
    def statistic(self) -> str: ...

    @property
    def config_hash(self) -> str: ...

    def label(self) -> str: ...

    def has_level(self, level: float) -> bool: ...

    def critical_values(self, side: Side, level: float) -> Tuple[float, ...]: ...

    def p_value(self, statistic: float, side: Side) -> float: ...


class TestOutcome(BaseModel):
    """Result of one N-type test on one sample."""

    model_config = ConfigDict(frozen=True)
    __test__ = False  # not a pytest class

    statistic: float
    side: Side
    level: float
    critical_source: str
    critical_values: Tuple[float, ...]
    p_value: float
    reject: bool


# Statistics


def n_statistic_batch(x: np.ndarray, cfg: EstimatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """N for every row of ``x``."""
    v_l, v_m, v_r, v_all = block_variances_batch(x, cfg)
    n = np.shape(x)[-1]
    return (v_l + v_r - 2.0 * v_m) / v_all * math.sqrt(n) / rho()


def n1_statistic_batch(x: np.ndarray, cfg: EstimatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    v_l, v_m, _, v_all = block_variances_batch(x, cfg)
    return math.sqrt(np.shape(x)[-1]) * (v_l - v_m) / v_all


def n2_statistic_batch(x: np.ndarray, cfg: EstimatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    v_l, v_m, _, _ = block_variances_batch(x, cfg)
    if np.any(v_m <= 0.0):
        raise DegenerateVariance("middle-block variance is zero")
    return math.sqrt(np.shape(x)[-1]) * (v_l - v_m) / v_m


def n3_statistic_batch(
    x: np.ndarray,
    a: Partition,
    b: Partition,
    lam: float,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    batch = np.asarray(x, dtype=float).reshape(-1, np.shape(x)[-1])
    _, v_a = conditional_moments_batch(batch, a, cfg)
    _, v_b = conditional_moments_batch(batch, b, cfg)
    if np.any(v_b <= 0.0):
        raise DegenerateVariance(f"conditional variance on {b} is zero")
    return math.sqrt(batch.shape[1]) * (v_a / v_b - lam)


def n3_tail_batch(x: np.ndarray, cfg: EstimatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """N3 with A the lower 20%, B the whole line and lambda = lambda_tail()."""
    return n3_statistic_batch(x, LOWER_TAIL, FULL, lambda_tail(), cfg)


def n3_tail_statistic(s: Sample, cfg: EstimatorConfig = DEFAULT_CONFIG) -> float:
    return float(n3_tail_batch(s.as_batch(), cfg)[0])


def n_statistic(s: Sample, cfg: EstimatorConfig = DEFAULT_CONFIG) -> float:
    """The N statistic of ``s``."""
    return float(n_statistic_batch(s.as_batch(), cfg)[0])


def n1_statistic(s: Sample, cfg: EstimatorConfig = DEFAULT_CONFIG) -> float:
    """Lower-tail impact relative to the overall variance."""
    return float(n1_statistic_batch(s.as_batch(), cfg)[0])


def n2_statistic(s: Sample, cfg: EstimatorConfig = DEFAULT_CONFIG) -> float:
    """Lower-tail impact relative to the middle-block variance."""
    return float(n2_statistic_batch(s.as_batch(), cfg)[0])


def n3_statistic(
    s: Sample,
    a: Partition,
    b: Partition,
    lam: float,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
) -> float:
    """sqrt(n) (s2_A / s2_B - lam)."""
    return float(n3_statistic_batch(s.as_batch(), a, b, lam, cfg)[0])


# Tests


def asymptotic_critical_values(side: Side, level: float) -> Tuple[float, ...]:
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must be in (0, 1), got {level}")
    if side is Side.RIGHT:
        return (std_normal_quantile(1.0 - level),)
    if side is Side.LEFT:
        return (std_normal_quantile(level),)
    return (std_normal_quantile(level / 2.0), std_normal_quantile(1.0 - level / 2.0))


def asymptotic_p_value(statistic: float, side: Side) -> float:
    upper = 1.0 - std_normal_cdf(statistic)
    lower = std_normal_cdf(statistic)
    if side is Side.RIGHT:
        return upper
    if side is Side.LEFT:
        return lower
    return min(1.0, 2.0 * min(upper, lower))


def rejects(statistic: float, side: Side, critical: Tuple[float, ...]) -> bool:
    """True when ``statistic`` lies in the rejection region bounded by ``critical``."""
    if side is Side.RIGHT:
        return statistic > critical[-1]
    if side is Side.LEFT:
        return statistic < critical[0]
    return statistic < critical[0] or statistic > critical[-1]


def _check_calibration(
    calibration: Optional[CriticalTable],
    n: int,
    level: float,
    side: Side,
    name: str,
    config_key: str,
) -> CriticalTable:
    if calibration is None or calibration.n != n or not calibration.has_level(level):
        raise MissingCalibration(
            f"no calibrated threshold for {name} at n={n}, level={level}, "
            f"side={side.value}; run `ntest calibrate` first"
        )
    calibrated = getattr(calibration.statistic, "value", calibration.statistic)
    if calibrated != name:
        raise MissingCalibration(f"calibration is for {calibrated}, not for {name}")
    if calibration.config_hash != config_key:
        raise MissingCalibration(
            f"{name} calibration was built for estimator variant "
            f"{calibration.config_hash}, expected {config_key}"
        )
    return calibration


def _resolve(
    statistic: float,
    side: Side,
    level: float,
    source: CriticalSource,
    calibration: Optional[CriticalTable],
    n: int,
    name: str,
    config_key: str,
) -> TestOutcome:
    if source is CriticalSource.ASYMPTOTIC_NORMAL:
        critical = asymptotic_critical_values(side, level)
        p_value = asymptotic_p_value(statistic, side)
        label = CriticalSource.ASYMPTOTIC_NORMAL.value
    else:
        table = _check_calibration(calibration, n, level, side, name, config_key)
        critical = table.critical_values(side, level)
        p_value = table.p_value(statistic, side)
        label = table.label()

    return TestOutcome(
        statistic=statistic,
        side=side,
        level=level,
        critical_source=label,
        critical_values=tuple(float(c) for c in critical),
        p_value=float(min(1.0, max(0.0, p_value))),
        reject=rejects(statistic, side, critical),
    )


def n_test(
    s: Sample,
    side: Side = Side.RIGHT,
    level: float = 0.05,
    critical_source: CriticalSource = CriticalSource.ASYMPTOTIC_NORMAL,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
    calibration: Optional[CriticalTable] = None,
) -> TestOutcome:
    """Test normality of ``s`` with the N statistic.

    The asymptotic source uses standard normal quantiles and accepts any
    level in (0, 1). The calibrated source needs a null calibration of N for
    the sample size, built with the same estimator variant ``cfg``, that
    covers ``level``.
    """
    statistic = n_statistic(s, cfg)
    return _resolve(
        statistic, side, level, critical_source, calibration, s.n, "N", cfg.config_hash()
    )


def tail_test(
    statistic: float,
    n: int,
    side: Side,
    level: float,
    calibration: Optional[CriticalTable],
    name: str,
    config_key: str,
) -> TestOutcome:
    """Calibrated test for a statistic without an asymptotic law (N1, N2, N3,
    or a reference test).

    ``name`` and ``config_key`` must match the calibration's statistic and
    estimator variant key.
    """
    return _resolve(
        statistic,
        side,
        level,
        CriticalSource.CALIBRATED,
        calibration,
        n,
        name,
        config_key,
    )
