"""
Order statistics and conditional sample moments.

Two ways of picking the observations that belong to a quantile block are
supported:

* ``floor_index`` - order statistics X_(i) for i = [n alpha] + 1 .. [n beta].
* ``r_type7_quantile`` - membership by comparison with the type-7
  (linearly interpolated) empirical quantiles: x <= q_beta for a lower
  block, q_alpha < x < q_beta for an interior block, x >= q_alpha for an
  upper block. Values sitting on a boundary can land in two blocks.

Every estimator works on a 2-D batch (replications x n) so the Monte Carlo
harness can evaluate thousands of samples with one call; the single-sample
functions are thin wrappers.
"""

from __future__ import annotations

import hashlib
import logging
import math
from enum import Enum
from functools import cached_property
from typing import Iterable, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from normality.errors import (
    DegenerateVariance,
    EmptyConditioningSet,
    InputError,
    SampleTooSmall,
)
from normality.normal_math import solve_qtilde
from normality.truncated_moments import Partition, lmr_partitions

logger = logging.getLogger(__name__)

MIN_PARTITION_SAMPLE = 15
ROUNDED_RATIO = 0.2

# absorbs representation error in products like 100 * 0.8
_FLOOR_GUARD = 1e-9


class Denominator(str, Enum):
    M = "m"
    M_MINUS_1 = "m_minus_1"

    @property
    def ddof(self) -> int:
        return 0 if self is Denominator.M else 1


class IndexMode(str, Enum):
    FLOOR_INDEX = "floor_index"
    R_TYPE7_QUANTILE = "r_type7_quantile"


class PartitionRatio(str, Enum):
    EXACT_QTILDE = "exact_qtilde"
    ROUNDED_20 = "rounded_20"


class EstimatorConfig(BaseModel):
    """Estimator variant used for conditional moments and the N statistic."""

    model_config = ConfigDict(frozen=True)

    denominator: Denominator = Denominator.M
    index_mode: IndexMode = IndexMode.FLOOR_INDEX
    partition_ratio: PartitionRatio = PartitionRatio.EXACT_QTILDE

    @classmethod
    def r_reference(cls) -> "EstimatorConfig":
        """Variant matching the short R listing: type-7 quantiles, var(), 0.2."""
        return cls(
            denominator=Denominator.M_MINUS_1,
            index_mode=IndexMode.R_TYPE7_QUANTILE,
            partition_ratio=PartitionRatio.ROUNDED_20,
        )

    def ratio(self) -> float:
        if self.partition_ratio is PartitionRatio.ROUNDED_20:
            return ROUNDED_RATIO
        return solve_qtilde().value

    def config_hash(self) -> str:
        payload = self.model_dump_json().encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:12]

    def describe(self) -> str:
        return (
            f"denominator={self.denominator.value}, index={self.index_mode.value}, "
            f"ratio={self.partition_ratio.value}"
        )


DEFAULT_CONFIG = EstimatorConfig()


class Sample:
    """Immutable real-valued sample with a cached ascending order."""

    def __init__(self, values: Iterable[float]):
        if not isinstance(values, np.ndarray):
            values = list(values)
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise InputError("no data")
        if not np.all(np.isfinite(arr)):
            raise InputError("sample contains NaN or infinite values")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return int(self._values.size)

    @cached_property
    def order(self) -> np.ndarray:
        """Stable ascending permutation of :attr:`values`."""
        perm = np.argsort(self._values, kind="stable")
        perm.setflags(write=False)
        return perm

    @cached_property
    def sorted_view(self) -> np.ndarray:
        out = self._values[self.order]
        out.setflags(write=False)
        return out

    def as_batch(self) -> np.ndarray:
        return self._values.reshape(1, -1)

    def affine(self, scale: float, shift: float) -> "Sample":
        return Sample(scale * self._values + shift)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Sample(n={self.n})"


# Index arithmetic


def floor_bounds(n: int, p: Partition) -> Tuple[int, int]:
    """Zero-based half-open slice [[n alpha], [n beta]) of the sorted sample."""
    lo = 0 if p.alpha == 0.0 else math.floor(n * p.alpha + _FLOOR_GUARD)
    hi = n if p.beta == 1.0 else math.floor(n * p.beta + _FLOOR_GUARD)
    return lo, hi


def block_sizes(n: int, cfg: EstimatorConfig = DEFAULT_CONFIG) -> Tuple[int, int, int]:
    """Sizes of the L, M, R blocks in floor-index mode."""
    sizes = []
    for p in lmr_partitions(cfg.ratio()):
        lo, hi = floor_bounds(n, p)
        sizes.append(hi - lo)
    return sizes[0], sizes[1], sizes[2]


def _as_batch(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr


# Batch estimators


def _floor_moments(
    sorted_batch: np.ndarray, p: Partition, ddof: int
) -> Tuple[np.ndarray, np.ndarray]:
    n = sorted_batch.shape[1]
    lo, hi = floor_bounds(n, p)
    m = hi - lo
    if m <= 0:
        raise EmptyConditioningSet(f"no order statistics in {p} for n={n}")
    if m - ddof <= 0:
        raise DegenerateVariance(f"block {p} holds {m} point(s); n-1 denominator undefined")
    block = sorted_batch[:, lo:hi]
    return block.mean(axis=1), block.var(axis=1, ddof=ddof)


def _type7_mask(batch: np.ndarray, p: Partition) -> np.ndarray:
    if p.is_full:
        return np.ones_like(batch, dtype=bool)
    probs = [g for g in (p.alpha, p.beta) if 0.0 < g < 1.0]
    qs = np.quantile(batch, probs, axis=1, method="linear")
    if p.alpha == 0.0:
        return batch <= qs[0][:, None]
    if p.beta == 1.0:
        return batch >= qs[0][:, None]
    return (batch > qs[0][:, None]) & (batch < qs[1][:, None])


def _type7_moments(
    batch: np.ndarray, p: Partition, ddof: int
) -> Tuple[np.ndarray, np.ndarray]:
    mask = _type7_mask(batch, p)
    counts = mask.sum(axis=1)
    if np.any(counts == 0):
        raise EmptyConditioningSet(f"no observations in {p} under type-7 quantiles")
    if np.any(counts - ddof <= 0):
        raise DegenerateVariance(f"block {p} holds a single point; n-1 denominator undefined")
    mean = np.where(mask, batch, 0.0).sum(axis=1) / counts
    dev = np.where(mask, batch - mean[:, None], 0.0)
    var = (dev * dev).sum(axis=1) / (counts - ddof)
    return mean, var


def conditional_moments_batch(
    x: np.ndarray,
    p: Partition,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
    presorted: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Conditional sample mean and variance of each row of ``x`` on ``p``."""
    batch = _as_batch(x)
    ddof = cfg.denominator.ddof
    if cfg.index_mode is IndexMode.FLOOR_INDEX or p.is_full:
        sorted_batch = batch if presorted or p.is_full else np.sort(batch, axis=1)
        return _floor_moments(sorted_batch, p, ddof)
    return _type7_moments(batch, p, ddof)


def conditional_mean(
    s: Sample, p: Partition, cfg: EstimatorConfig = DEFAULT_CONFIG
) -> float:
    """Conditional sample mean of ``s`` on the quantile block ``p``."""
    source = s.sorted_view if cfg.index_mode is IndexMode.FLOOR_INDEX else s.values
    mean, _ = conditional_moments_batch(source.reshape(1, -1), p, cfg, presorted=True)
    return float(mean[0])


def conditional_variance(
    s: Sample, p: Partition, cfg: EstimatorConfig = DEFAULT_CONFIG
) -> float:
    """Conditional sample variance of ``s`` on ``p`` (1/m or 1/(m-1) per ``cfg``)."""
    source = s.sorted_view if cfg.index_mode is IndexMode.FLOOR_INDEX else s.values
    _, var = conditional_moments_batch(source.reshape(1, -1), p, cfg, presorted=True)
    return float(var[0])


def check_partition_size(n: int) -> None:
    if n < MIN_PARTITION_SAMPLE:
        raise SampleTooSmall(
            f"20-60-20 partition needs at least {MIN_PARTITION_SAMPLE} observations, got {n}"
        )


def partition_206020(
    s: Sample, cfg: EstimatorConfig = DEFAULT_CONFIG
) -> Tuple[Partition, Partition, Partition]:
    """Lower, middle and upper blocks for ``s`` under ``cfg``."""
    check_partition_size(s.n)
    return lmr_partitions(cfg.ratio())


def block_variances_batch(
    x: np.ndarray, cfg: EstimatorConfig = DEFAULT_CONFIG
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(var_L, var_M, var_R, var_all) for each row of ``x``."""
    batch = _as_batch(x)
    check_partition_size(batch.shape[1])
    if cfg.index_mode is IndexMode.FLOOR_INDEX:
        batch = np.sort(batch, axis=1)
    lower, middle, upper = lmr_partitions(cfg.ratio())
    _, v_l = conditional_moments_batch(batch, lower, cfg, presorted=True)
    _, v_m = conditional_moments_batch(batch, middle, cfg, presorted=True)
    _, v_r = conditional_moments_batch(batch, upper, cfg, presorted=True)
    v_all = batch.var(axis=1, ddof=cfg.denominator.ddof)
    if np.any(v_all <= 0.0):
        raise DegenerateVariance("sample variance is zero")
    return v_l, v_m, v_r, v_all
