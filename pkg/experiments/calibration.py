"""
Null calibration: simulated critical values at a fixed sample size.

Standard-normal samples are pushed through every requested statistic and
the empirical null distribution is kept as quantiles on a uniform grid of
probabilities (0, 1/(G-1), ..., 1). Levels 1%, 2.5% and 5% sit exactly on the
default 10001-point grid.

On disk a calibration is one file: a magic line, a JSON header line and the
little-endian float64 quantile grid.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from experiments.registry import Statistic, evaluate_all
from experiments.runner import MonteCarloRunner, stream_key
from normality.distributions import NORMAL, draw, make_rng
from normality.empirical import DEFAULT_CONFIG, EstimatorConfig
from normality.errors import CalibrationFormatError, InputError, MissingCalibration
from normality.nstat import CALIBRATED_LEVELS, Side
from utils.constants import (
    CALIBRATION_FILE_PATTERN,
    CALIBRATION_FORMAT_VERSION,
    CALIBRATION_MAGIC,
    ERROR_MISSING_CALIBRATION,
    MIN_CALIBRATION_REPS,
    MSG_CALIBRATING,
    MSG_CALIBRATION_LOADED,
)
from utils.helpers import ensure_directory

logger = logging.getLogger(__name__)

_HEADER_KEYS = ("format", "statistic", "n", "reps", "seed", "config_hash", "grid_size")


def quantile_grid(size: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


@dataclass
class NullCalibration:
    """Empirical null quantiles of one statistic at sample size ``n``."""

    statistic: Statistic
    n: int
    reps: int
    seed: int
    config_hash: str
    quantiles: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.quantiles = np.asarray(self.quantiles, dtype=float)
        if self.quantiles.ndim != 1 or self.quantiles.size < 2:
            raise CalibrationFormatError("quantile grid must be 1-D with >= 2 points")
        if np.any(np.diff(self.quantiles) < 0.0):
            raise CalibrationFormatError("quantile grid is not monotone")

    @property
    def probs(self) -> np.ndarray:
        return quantile_grid(self.quantiles.size)

    def label(self) -> str:
        return f"calibrated(n={self.n}, reps={self.reps}, seed={self.seed})"

    def has_level(self, level: float) -> bool:
        return 0.0 < level < 0.5 and level * self.reps >= 1.0

    def quantile(self, prob: float) -> float:
        return float(np.interp(prob, self.probs, self.quantiles))

    def critical_value(self, side: Side, level: float) -> float:
        """Single threshold; the upper one for two-sided tests."""
        return self.critical_values(side, level)[-1]

    def critical_values(self, side: Side, level: float) -> Tuple[float, ...]:
        if side is Side.RIGHT:
            return (self.quantile(1.0 - level),)
        if side is Side.LEFT:
            return (self.quantile(level),)
        return (self.quantile(level / 2.0), self.quantile(1.0 - level / 2.0))

    def cdf(self, statistic: float) -> float:
        return float(np.interp(statistic, self.quantiles, self.probs, left=0.0, right=1.0))

    def p_value(self, statistic: float, side: Side) -> float:
        """(r + 1) / (R + 1) with r the estimated count of null draws as extreme."""
        below = self.cdf(statistic) * self.reps
        above = self.reps - below
        if side is Side.RIGHT:
            r = above
        elif side is Side.LEFT:
            r = below
        else:
            return min(1.0, 2.0 * min(above + 1.0, below + 1.0) / (self.reps + 1.0))
        return (r + 1.0) / (self.reps + 1.0)

    def to_summary(self, levels: Sequence[float] = CALIBRATED_LEVELS) -> dict:
        critical = {
            f"{side.value}@{level:g}": list(self.critical_values(side, level))
            for side in Side
            for level in levels
        }
        return {
            "statistic": self.statistic.value,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "critical_values": critical,
        }


def _null_chunk(
    size: int,
    seed: np.random.SeedSequence,
    n: int,
    statistics: Sequence[Statistic],
    cfg: EstimatorConfig,
) -> Dict[Statistic, np.ndarray]:
    batch = draw(NORMAL, (size, n), make_rng(seed))
    return evaluate_all(batch, statistics, cfg)


def calibrate_null(
    n: int,
    reps: int,
    seed: int,
    statistics: Iterable[Statistic] = (Statistic.N,),
    cfg: EstimatorConfig = DEFAULT_CONFIG,
    runner: Optional[MonteCarloRunner] = None,
    grid_size: Optional[int] = None,
) -> Dict[Statistic, NullCalibration]:
    """Simulate ``reps`` standard-normal samples of size ``n`` and keep the
    null quantiles of every statistic.

    Args:
        n: Sample size.
        reps: Number of replications, at least 10^4.
        seed: Master seed. All statistics share the same simulated samples.
        statistics: Statistics to calibrate.
        cfg: Estimator variant for the N-type statistics.
        runner: Worker pool; a serial runner by default.
        grid_size: Number of probabilities in the stored grid.

    Returns:
        Mapping from statistic to its calibration.

    Raises:
        InputError: If ``reps`` is below the minimum.
    """
    if reps < MIN_CALIBRATION_REPS:
        raise InputError(f"calibration needs reps >= {MIN_CALIBRATION_REPS}, got {reps}")
    statistics = list(dict.fromkeys(statistics))
    runner = runner or MonteCarloRunner()
    grid = quantile_grid(grid_size or settings.quantile_grid_size)

    logger.info(MSG_CALIBRATING.format(n=n, reps=reps))
    chunks = runner.run(
        _null_chunk,
        reps,
        seed,
        stream_key("null", n),
        args=(n, statistics, cfg),
        label=f"calibrate n={n}",
    )

    out: Dict[Statistic, NullCalibration] = {}
    for stat in statistics:
        values = np.concatenate([chunk[stat] for chunk in chunks])
        out[stat] = NullCalibration(
            statistic=stat,
            n=n,
            reps=reps,
            seed=seed,
            config_hash=stat.config_key(cfg),
            quantiles=np.quantile(values, grid, method="linear"),
        )
    return out


class CalibrationBook:
    """In-memory calibrations keyed by (statistic, n, estimator variant).

    Reference statistics share the variant key ``"reference"``, so one JB table
    serves every estimator variant while N-type tables never cross variants.
    """

    def __init__(self, calibrations: Iterable[NullCalibration] = ()):
        self._tables: Dict[Tuple[Statistic, int, str], NullCalibration] = {}
        for cal in calibrations:
            self.add(cal)

    def add(self, cal: NullCalibration) -> None:
        self._tables[(cal.statistic, cal.n, cal.config_hash)] = cal

    def update(self, calibrations: Dict[Statistic, NullCalibration]) -> None:
        for cal in calibrations.values():
            self.add(cal)

    def get(
        self, statistic: Statistic, n: int, cfg: EstimatorConfig = DEFAULT_CONFIG
    ) -> NullCalibration:
        try:
            return self._tables[(statistic, n, statistic.config_key(cfg))]
        except KeyError:
            pass
        others = [key[2] for key in self._tables if key[:2] == (statistic, n)]
        if others:
            raise MissingCalibration(
                f"{statistic.value} calibration for n={n} was built for estimator variant "
                f"{', '.join(others)}, not for {cfg.describe()}; "
                + ERROR_MISSING_CALIBRATION.format(n=n)
            )
        raise MissingCalibration(
            f"no {statistic.value} calibration for n={n}; "
            + ERROR_MISSING_CALIBRATION.format(n=n)
        )

    def critical_values(
        self,
        statistic: Statistic,
        n: int,
        side: Side,
        level: float,
        cfg: EstimatorConfig = DEFAULT_CONFIG,
    ) -> Tuple[float, ...]:
        cal = self.get(statistic, n, cfg)
        if not cal.has_level(level):
            raise MissingCalibration(
                f"{statistic.value} calibration for n={n} has {cal.reps} reps, "
                f"too few for level {level}"
            )
        return cal.critical_values(side, level)

    def __contains__(self, key: Tuple[Statistic, int, str]) -> bool:
        return key in self._tables

    def __len__(self) -> int:
        return len(self._tables)


class CalibrationStore:
    """Directory of calibration files."""

    def __init__(self, directory: Optional[str] = None):
        self.directory = Path(directory or settings.calibration_dir)

    def path_for(
        self, statistic: Statistic, n: int, reps: int, seed: int, config_hash: str
    ) -> Path:
        name = CALIBRATION_FILE_PATTERN.format(
            statistic=statistic.value, n=n, reps=reps, seed=seed, config=config_hash
        )
        return self.directory / name

    def save(self, cal: NullCalibration) -> Path:
        ensure_directory(str(self.directory))
        path = self.path_for(cal.statistic, cal.n, cal.reps, cal.seed, cal.config_hash)
        header = {
            "format": CALIBRATION_FORMAT_VERSION,
            "statistic": cal.statistic.value,
            "n": cal.n,
            "reps": cal.reps,
            "seed": cal.seed,
            "config_hash": cal.config_hash,
            "grid_size": int(cal.quantiles.size),
        }
        with open(path, "wb") as f:
            f.write(CALIBRATION_MAGIC)
            f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            f.write(cal.quantiles.astype("<f8").tobytes())
        return path

    @staticmethod
    def read(path: Path) -> NullCalibration:
        """Parse one calibration file."""
        with open(path, "rb") as f:
            if f.read(len(CALIBRATION_MAGIC)) != CALIBRATION_MAGIC:
                raise CalibrationFormatError(f"{path}: not a calibration file")
            try:
                header = json.loads(f.readline().decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise CalibrationFormatError(f"{path}: unreadable header") from exc
            payload = f.read()

        missing = [key for key in _HEADER_KEYS if key not in header]
        if missing:
            raise CalibrationFormatError(f"{path}: header lacks {', '.join(missing)}")
        if header["format"] != CALIBRATION_FORMAT_VERSION:
            raise CalibrationFormatError(
                f"{path}: format {header['format']} not supported"
            )
        quantiles = np.frombuffer(payload, dtype="<f8")
        if quantiles.size != header["grid_size"]:
            raise CalibrationFormatError(
                f"{path}: expected {header['grid_size']} quantiles, found {quantiles.size}"
            )
        try:
            statistic = Statistic(header["statistic"])
        except ValueError as exc:
            raise CalibrationFormatError(f"{path}: unknown statistic") from exc
        return NullCalibration(
            statistic=statistic,
            n=int(header["n"]),
            reps=int(header["reps"]),
            seed=int(header["seed"]),
            config_hash=str(header["config_hash"]),
            quantiles=quantiles.astype(float),
        )

    def load(
        self,
        statistic: Statistic,
        n: int,
        reps: int,
        seed: int,
        cfg: EstimatorConfig = DEFAULT_CONFIG,
    ) -> NullCalibration:
        path = self.path_for(statistic, n, reps, seed, statistic.config_key(cfg))
        if not path.exists():
            raise MissingCalibration(
                f"no {statistic.value} calibration at {path}; "
                + ERROR_MISSING_CALIBRATION.format(n=n)
            )
        cal = self.read(path)
        logger.info(MSG_CALIBRATION_LOADED.format(file=path))
        return cal

    def get_or_create(
        self,
        n: int,
        reps: int,
        seed: int,
        statistics: Iterable[Statistic],
        cfg: EstimatorConfig = DEFAULT_CONFIG,
        runner: Optional[MonteCarloRunner] = None,
    ) -> Dict[Statistic, NullCalibration]:
        """Load what is cached, simulate the rest together and save it."""
        found: Dict[Statistic, NullCalibration] = {}
        missing: List[Statistic] = []
        for stat in dict.fromkeys(statistics):
            try:
                found[stat] = self.load(stat, n, reps, seed, cfg)
            except MissingCalibration:
                missing.append(stat)

        if missing:
            fresh = calibrate_null(n, reps, seed, missing, cfg, runner)
            for cal in fresh.values():
                self.save(cal)
            found.update(fresh)
        return found

    def book(
        self,
        ns: Iterable[int],
        reps: int,
        seed: int,
        statistics: Iterable[Statistic],
        cfg: EstimatorConfig = DEFAULT_CONFIG,
        runner: Optional[MonteCarloRunner] = None,
        create: bool = True,
    ) -> CalibrationBook:
        """Calibrations for every (statistic, n); loads only when ``create`` is False."""
        book = CalibrationBook()
        statistics = list(dict.fromkeys(statistics))
        for n in ns:
            if create:
                book.update(self.get_or_create(n, reps, seed, statistics, cfg, runner))
            else:
                for stat in statistics:
                    book.add(self.load(stat, n, reps, seed, cfg))
        return book
