"""
Standard-normal special functions and the 20-60-20 balance ratio.

The balance ratio q~ is the probability Phi(x*) where x* is the unique
negative root of

    g(x) = -x Phi(x) - phi(x) (1 - 2 Phi(x)).

At that ratio the conditional variances of the lower, middle and upper
blocks of a normal population coincide.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import optimize, special

from normality.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Bracket for the balance-equation root; g changes sign exactly once here.
QTILDE_BRACKET = (-3.0, -0.1)
QTILDE_XTOL = 1e-13


@dataclass(frozen=True)
class QTilde:
    """Balance ratio q~ together with the root it was derived from."""

    value: float
    root: float

    def residual(self) -> float:
        return float(balance_equation(self.root))


def std_normal_pdf(x: ArrayLike) -> ArrayLike:
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(x: ArrayLike) -> ArrayLike:
    """Standard normal distribution function.

    Delegates to ``scipy.special.ndtr`` which is erfc based and accurate to a
    few ulps over the whole real line, including +-inf.
    """
    out = special.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_quantile(p: ArrayLike) -> ArrayLike:
    """Inverse of the standard normal distribution function.

    ``scipy.special.ndtri`` gives the starting point; a single Newton step
    against :func:`std_normal_cdf` keeps quantile/cdf round trips consistent
    with the cdf used everywhere else.

    Raises:
        DomainError: if any ``p`` is outside the open interval (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError(f"quantile requires 0 < p < 1, got {p!r}")

    x = special.ndtri(p_arr)
    x = x - (special.ndtr(x) - p_arr) / (INV_SQRT_2PI * np.exp(-0.5 * x * x))
    return float(x) if x.ndim == 0 else x


def balance_equation(x: ArrayLike) -> ArrayLike:
    """Left-hand side of the 20-60-20 balance equation."""
    cdf = std_normal_cdf(x)
    pdf = std_normal_pdf(x)
    return -x * cdf - pdf * (1.0 - 2.0 * cdf)


def _balance_derivative(x: float) -> float:
    cdf = std_normal_cdf(x)
    pdf = std_normal_pdf(x)
    return -cdf - 2.0 * x * pdf * cdf + 2.0 * pdf * pdf


_qtilde_lock = threading.Lock()
_qtilde_cache: Optional[QTilde] = None


def _compute_qtilde() -> QTilde:
    lo, hi = QTILDE_BRACKET
    g_lo, g_hi = balance_equation(lo), balance_equation(hi)
    if not (g_lo < 0.0 < g_hi):
        # Sign change is provable at these endpoints; failing here is a defect.
        raise RuntimeError(
            f"balance equation not bracketed on {QTILDE_BRACKET}: g={g_lo}, {g_hi}"
        )

    root = optimize.brentq(balance_equation, lo, hi, xtol=QTILDE_XTOL, maxiter=200)
    root -= balance_equation(root) / _balance_derivative(root)

    qtilde = QTilde(value=std_normal_cdf(root), root=float(root))
    logger.debug("solved balance ratio q~=%.15f (root %.15f)", qtilde.value, root)
    return qtilde


def solve_qtilde() -> QTilde:
    """Return the process-wide balance ratio, solving it on first use."""
    global _qtilde_cache
    if _qtilde_cache is None:
        with _qtilde_lock:
            if _qtilde_cache is None:
                _qtilde_cache = _compute_qtilde()
    return _qtilde_cache
