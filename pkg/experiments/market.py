"""
Normality tests on market return series.

Each series is cut into disjoint windows of length n, the remainder at the
end is dropped, and every window is tested with JB, AD, SW and right-sided
N against calibrated thresholds. Per test the study reports the total
rejection ratio T (windows rejected) and the unique rejection ratio U
(windows rejected by that test alone).
"""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from experiments.calibration import CalibrationBook
from experiments.power import tally_rejections
from experiments.registry import (
    UNIQUE_TESTS,
    TestName,
    evaluate_all,
    rejection_mask,
    statistics_for,
)
from normality.empirical import DEFAULT_CONFIG, EstimatorConfig
from normality.errors import InputError, InsufficientData, NonPositivePrice
from utils.constants import ERROR_NO_DATA, MSG_SKIPPED_SERIES

logger = logging.getLogger(__name__)


class ReturnsMode(str, Enum):
    LOG = "log"
    SIMPLE = "simple"


class SkippedSeries(BaseModel):
    """A series left out of a market study at one window length."""

    model_config = ConfigDict(frozen=True)

    name: str
    n: int
    reason: str


class MarketStudyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    level: float
    windows: int
    rejects_any: float
    total: Dict[str, float]
    unique: Dict[str, float]


class MarketStudy(BaseModel):
    rows: List[MarketStudyRow]
    skipped: List[SkippedSeries] = Field(default_factory=list)


def log_returns(
    prices: Union[Sequence[float], np.ndarray, pd.Series],
    mode: ReturnsMode = ReturnsMode.LOG,
) -> np.ndarray:
    """Returns of a positive price path: ln(p_t / p_{t-1}) or p_t / p_{t-1} - 1.

    Raises:
        NonPositivePrice: If any price is zero or negative.
        InsufficientData: If fewer than two prices are given.
    """
    p = np.asarray(prices, dtype=float).ravel()
    if p.size < 2:
        raise InsufficientData(f"need at least 2 prices, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InputError("prices contain NaN or infinite values")
    if np.any(p <= 0.0):
        bad = int(np.argmax(p <= 0.0))
        raise NonPositivePrice(f"price at position {bad} is {p[bad]}")
    ratio = p[1:] / p[:-1]
    if ReturnsMode(mode) is ReturnsMode.SIMPLE:
        return ratio - 1.0
    return np.log(ratio)


def _looks_numeric(value: object) -> bool:
    return not pd.isna(pd.to_numeric(pd.Series([value]), errors="coerce").iloc[0])


def load_series(path: Union[str, Path], column: Optional[str] = None) -> pd.Series:
    """Read one series from a CSV file.

    The header row is optional. Without ``column`` the last column is used
    (``date,value`` files and one-value-per-line files both work). ``column``
    is a header name, or a zero-based index when the file has no header.

    Raises:
        InputError: If the file is empty, the column is unknown, or a value
            is not a number.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, comment="#", skip_blank_lines=True, dtype=str)
    except pd.errors.EmptyDataError:
        raise InputError(f"{path}: {ERROR_NO_DATA}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc

    if frame.empty:
        raise InputError(f"{path}: {ERROR_NO_DATA}")
    if not _looks_numeric(frame.iloc[0, -1]):
        frame.columns = [str(c).strip() for c in frame.iloc[0]]
        frame = frame.iloc[1:]
    else:
        frame.columns = [str(i) for i in range(frame.shape[1])]
    if frame.empty:
        raise InputError(f"{path}: {ERROR_NO_DATA}")

    name = frame.columns[-1] if column is None else str(column)
    if name not in frame.columns:
        raise InputError(f"{path}: no column {name!r} (have {', '.join(frame.columns)})")

    values = pd.to_numeric(frame[name].str.strip(), errors="coerce")
    if values.isna().any():
        row = int(values.isna().to_numpy().argmax())
        raise InputError(f"{path}: non-numeric value {frame[name].iloc[row]!r}")
    return pd.Series(values.to_numpy(dtype=float), name=path.stem)


def split_windows(values: Union[Sequence[float], np.ndarray], n: int) -> np.ndarray:
    """Disjoint consecutive windows of length ``n`` as a (k x n) array."""
    x = np.asarray(values, dtype=float).ravel()
    k = x.size // n
    if k == 0:
        raise InsufficientData(f"series of length {x.size} holds no window of {n}")
    return x[: k * n].reshape(k, n)


def count_windows(lengths: Iterable[int], n: int) -> int:
    return sum(length // n for length in lengths)


def returns_study(
    series: Mapping[str, Union[Sequence[float], np.ndarray]],
    ns: Iterable[int],
    levels: Iterable[float],
    book: CalibrationBook,
    tests: Sequence[TestName] = UNIQUE_TESTS,
    cfg: EstimatorConfig = DEFAULT_CONFIG,
) -> MarketStudy:
    """T and U per test for every (n, level) over all windows of all series.

    Raises:
        MissingCalibration: If ``book`` lacks a threshold.
        InsufficientData: If no series is long enough for some n.
    """
    tests = list(tests)
    statistics = statistics_for(tests)
    levels = list(levels)
    rows: List[MarketStudyRow] = []
    skipped: List[SkippedSeries] = []

    for n in ns:
        blocks = []
        for name, values in series.items():
            try:
                windows = split_windows(values, n)
            except InsufficientData as exc:
                logger.warning(MSG_SKIPPED_SERIES.format(name=name, n=n, reason=exc))
                skipped.append(SkippedSeries(name=name, n=n, reason=str(exc)))
                continue
            flat = np.ptp(windows, axis=1) == 0.0
            if flat.any():
                reason = f"{int(flat.sum())} constant window(s) dropped"
                logger.warning(MSG_SKIPPED_SERIES.format(name=name, n=n, reason=reason))
                windows = windows[~flat]
            if windows.size:
                blocks.append(windows)
        if not blocks:
            raise InsufficientData(f"no series holds a window of length {n}")

        windows = np.vstack(blocks)
        values_by_stat = evaluate_all(windows, statistics, cfg)
        k = windows.shape[0]

        for level in levels:
            masks = np.array(
                [
                    rejection_mask(
                        values_by_stat[t.statistic],
                        t.side,
                        book.critical_values(t.statistic, n, t.side, level, cfg),
                    )
                    for t in tests
                ]
            )
            total, unique, any_count = tally_rejections(masks)
            rows.append(
                MarketStudyRow(
                    n=n,
                    level=level,
                    windows=k,
                    rejects_any=any_count / k,
                    total={t.value: float(c) / k for t, c in zip(tests, total)},
                    unique={t.value: float(c) / k for t, c in zip(tests, unique)},
                )
            )
    return MarketStudy(rows=rows, skipped=skipped)
