"""
Seedable samplers for the null and the symmetric alternatives.

Families: normal, Cauchy, logistic, Laplace, Student's t(v) and the
generalised normal GN(s) with density s / (2 Gamma(1/s)) exp(-|x|^s).
Location is 0 and scale 1 throughout; ``standardized=True`` divides by the
exact standard deviation instead.

All draws come from numpy's PCG64 seeded through ``SeedSequence`` so a
(seed, stream) pair yields the same numbers on every platform.
"""

from __future__ import annotations

import logging
import math
import re
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import special

from normality.empirical import Sample
from normality.errors import InvalidSpec

logger = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


class Family(str, Enum):
    NORMAL = "normal"
    CAUCHY = "cauchy"
    LOGISTIC = "logistic"
    LAPLACE = "laplace"
    STUDENT_T = "student_t"
    GEN_NORMAL = "gen_normal"


class AlternativeSpec(BaseModel):
    """One sampling distribution of the power study."""

    model_config = ConfigDict(frozen=True)

    family: Family
    df: Optional[int] = None
    shape: Optional[float] = None
    standardized: bool = False

    @model_validator(mode="after")
    def _check_parameters(self) -> "AlternativeSpec":
        if self.family is Family.STUDENT_T:
            if self.df is None or self.df < 1:
                raise ValueError("student_t needs integer df >= 1")
            if self.standardized and self.df < 3:
                raise ValueError("student_t standardization needs df >= 3")
        elif self.df is not None:
            raise ValueError(f"{self.family.value} takes no df")
        if self.family is Family.GEN_NORMAL:
            if self.shape is None or not self.shape > 0:
                raise ValueError("gen_normal needs shape > 0")
        elif self.shape is not None:
            raise ValueError(f"{self.family.value} takes no shape")
        if self.family is Family.CAUCHY and self.standardized:
            raise ValueError("cauchy has no variance and cannot be standardized")
        return self

    @property
    def label(self) -> str:
        if self.family is Family.STUDENT_T:
            return f"t({self.df})"
        if self.family is Family.GEN_NORMAL:
            return f"GN({self.shape:g})"
        return self.family.value.capitalize()

    def sd(self) -> float:
        """Standard deviation of the unstandardized family."""
        if self.family is Family.NORMAL:
            return 1.0
        if self.family is Family.LOGISTIC:
            return math.pi / math.sqrt(3.0)
        if self.family is Family.LAPLACE:
            return math.sqrt(2.0)
        if self.family is Family.STUDENT_T:
            if self.df <= 2:
                return math.inf
            return math.sqrt(self.df / (self.df - 2.0))
        if self.family is Family.GEN_NORMAL:
            s = self.shape
            return math.sqrt(math.exp(special.gammaln(3.0 / s) - special.gammaln(1.0 / s)))
        return math.inf

    def standardize(self) -> "AlternativeSpec":
        return self.model_copy(update={"standardized": True})


def make_spec(family: Union[Family, str], **kwargs) -> AlternativeSpec:
    """Build an :class:`AlternativeSpec`, turning validation failures into InvalidSpec."""
    try:
        return AlternativeSpec(family=Family(family), **kwargs)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc


_SPEC_PATTERN = re.compile(
    r"^\s*(?P<name>[a-z_]+?)\s*(?:\(?\s*(?P<param>[0-9.]+)\s*\)?)?\s*$", re.IGNORECASE
)
_ALIASES = {
    "normal": Family.NORMAL,
    "norm": Family.NORMAL,
    "cauchy": Family.CAUCHY,
    "logistic": Family.LOGISTIC,
    "laplace": Family.LAPLACE,
    "t": Family.STUDENT_T,
    "student_t": Family.STUDENT_T,
    "gn": Family.GEN_NORMAL,
    "gen_normal": Family.GEN_NORMAL,
}


def parse_spec(text: str, standardized: bool = False) -> AlternativeSpec:
    """Parse ``normal``, ``t(5)``, ``t5``, ``gn(2.5)``, ``gn2.5`` and friends."""
    match = _SPEC_PATTERN.match(text)
    if not match or match.group("name").lower() not in _ALIASES:
        raise InvalidSpec(f"unknown distribution {text!r}")
    family = _ALIASES[match.group("name").lower()]
    param = match.group("param")
    kwargs: dict = {"standardized": standardized}
    try:
        if family is Family.STUDENT_T:
            kwargs["df"] = int(param) if param is not None else None
        elif family is Family.GEN_NORMAL:
            kwargs["shape"] = float(param) if param is not None else None
        elif param is not None:
            raise InvalidSpec(f"{family.value} takes no parameter: {text!r}")
    except ValueError as exc:
        raise InvalidSpec(f"bad parameter in {text!r}") from exc
    return make_spec(family, **kwargs)


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def draw(
    spec: AlternativeSpec, size: Union[int, Tuple[int, ...]], rng: np.random.Generator
) -> np.ndarray:
    """Raw i.i.d. draws from ``spec`` with the given shape."""
    family = spec.family
    if family is Family.NORMAL:
        out = rng.standard_normal(size)
    elif family is Family.CAUCHY:
        out = rng.standard_cauchy(size)
    elif family is Family.LOGISTIC:
        out = rng.logistic(0.0, 1.0, size)
    elif family is Family.LAPLACE:
        out = rng.laplace(0.0, 1.0, size)
    elif family is Family.STUDENT_T:
        out = rng.standard_t(spec.df, size)
    else:
        # |X|^s ~ Gamma(1/s, 1), symmetric sign
        s = spec.shape
        magnitude = rng.standard_gamma(1.0 / s, size) ** (1.0 / s)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        out = sign * magnitude
    if spec.standardized:
        out = out / spec.sd()
    return out


def sample(spec: AlternativeSpec, n: int, seed: SeedLike) -> Sample:
    """``n`` i.i.d. draws from ``spec`` wrapped as a :class:`Sample`."""
    if n < 1:
        raise InvalidSpec(f"sample size must be >= 1, got {n}")
    return Sample(draw(spec, n, make_rng(seed)))


def gn_density(x: Union[float, np.ndarray], s: float) -> Union[float, np.ndarray]:
    """Generalised normal density s / (2 Gamma(1/s)) exp(-|x|^s)."""
    if not s > 0:
        raise InvalidSpec(f"shape must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    out = s / (2.0 * special.gamma(1.0 / s)) * np.exp(-np.abs(x) ** s)
    return float(out) if out.ndim == 0 else out


def gn_cdf(x: Union[float, np.ndarray], s: float) -> Union[float, np.ndarray]:
    """Generalised normal distribution function via the regularised lower gamma."""
    if not s > 0:
        raise InvalidSpec(f"shape must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    out = 0.5 + 0.5 * np.sign(x) * special.gammainc(1.0 / s, np.abs(x) ** s)
    return float(out) if out.ndim == 0 else out


NORMAL = make_spec(Family.NORMAL)

# Alternatives of the fat-tailed and slim-tailed power tables
FAT_TAILED_SPECS: Tuple[AlternativeSpec, ...] = (
    make_spec(Family.CAUCHY),
    make_spec(Family.LOGISTIC),
    make_spec(Family.STUDENT_T, df=2),
    make_spec(Family.STUDENT_T, df=5),
    make_spec(Family.STUDENT_T, df=10),
    make_spec(Family.STUDENT_T, df=20),
    make_spec(Family.STUDENT_T, df=30),
    make_spec(Family.LAPLACE),
    make_spec(Family.GEN_NORMAL, shape=1.5),
)
SLIM_TAILED_SPECS: Tuple[AlternativeSpec, ...] = (
    make_spec(Family.GEN_NORMAL, shape=2.5),
    make_spec(Family.GEN_NORMAL, shape=3.0),
    make_spec(Family.GEN_NORMAL, shape=5.0),
    make_spec(Family.GEN_NORMAL, shape=10.0),
)
UNIQUE_SPECS: Tuple[AlternativeSpec, ...] = (
    make_spec(Family.LOGISTIC),
    make_spec(Family.STUDENT_T, df=20),
    make_spec(Family.LAPLACE),
)
