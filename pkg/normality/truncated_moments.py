"""
Closed-form conditional (truncated) moments of the standard normal.

For a quantile interval A[alpha, beta] with x_g = Phi^-1(g) the raw moments
of X | X in A are

    m2 = 1 + (x_a phi_a - x_b phi_b) / (beta - alpha)
    m3 = (x_a^2 phi_a - x_b^2 phi_b) / (beta - alpha) + 2 (phi_a - phi_b) / (beta - alpha)
    m4 = 3 + (x_a^3 phi_a - x_b^3 phi_b) / (beta - alpha)
           + 3 (x_a phi_a - x_b phi_b) / (beta - alpha)

with mu~ = (phi_a - phi_b) / (beta - alpha).  At alpha = 0 or beta = 1 the
quantile is infinite and every x^k phi(x) term is zero; those terms are
dropped instead of evaluated.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import integrate

from normality.errors import InvalidPartition
from normality.normal_math import (
    solve_qtilde,
    std_normal_pdf,
    std_normal_quantile,
)

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-11


@dataclass(frozen=True)
class Partition:
    """Quantile interval [alpha, beta] defining the conditioning set A[alpha, beta]."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha < self.beta <= 1.0):
            raise InvalidPartition(
                f"partition needs 0 <= alpha < beta <= 1, got [{self.alpha}, {self.beta}]"
            )

    @property
    def width(self) -> float:
        return self.beta - self.alpha

    @property
    def is_full(self) -> bool:
        return self.alpha == 0.0 and self.beta == 1.0

    @property
    def x_alpha(self) -> float:
        return -math.inf if self.alpha == 0.0 else std_normal_quantile(self.alpha)

    @property
    def x_beta(self) -> float:
        return math.inf if self.beta == 1.0 else std_normal_quantile(self.beta)

    def reflect(self) -> "Partition":
        """Mirror image [1 - beta, 1 - alpha]."""
        return Partition(1.0 - self.beta, 1.0 - self.alpha)

    def __str__(self) -> str:
        return f"[{self.alpha:.6g}, {self.beta:.6g}]"


FULL = Partition(0.0, 1.0)


@dataclass(frozen=True)
class TruncatedMoments:
    """Standardised conditional moments of N(0, 1) on a partition."""

    mu_tilde: float
    sigma2_tilde: float
    m2: float
    m3: float
    m4: float
    kappa_tilde: float


def _boundary_terms(gamma: float, x: float) -> Tuple[float, float, float, float]:
    """(phi, x phi, x^2 phi, x^3 phi) at a quantile, zero at gamma in {0, 1}."""
    if gamma in (0.0, 1.0):
        return 0.0, 0.0, 0.0, 0.0
    phi = std_normal_pdf(x)
    return phi, x * phi, x * x * phi, x * x * x * phi


def _central_fourth(mu: float, m2: float, m3: float, m4: float) -> float:
    return m4 - 4.0 * mu * m3 + 6.0 * mu * mu * m2 - 3.0 * mu ** 4


def trunc_moments(p: Partition) -> TruncatedMoments:
    """Closed-form standardised conditional moments on ``p``."""
    d = p.width
    pa, xpa, x2pa, x3pa = _boundary_terms(p.alpha, p.x_alpha)
    pb, xpb, x2pb, x3pb = _boundary_terms(p.beta, p.x_beta)

    mu = (pa - pb) / d
    m2 = 1.0 + (xpa - xpb) / d
    m3 = (x2pa - x2pb) / d + 2.0 * (pa - pb) / d
    m4 = 3.0 + (x3pa - x3pb) / d + 3.0 * (xpa - xpb) / d

    sigma2 = m2 - mu * mu
    kappa = _central_fourth(mu, m2, m3, m4) / (sigma2 * sigma2)
    return TruncatedMoments(
        mu_tilde=mu, sigma2_tilde=sigma2, m2=m2, m3=m3, m4=m4, kappa_tilde=kappa
    )


def quadrature_moments(p: Partition) -> TruncatedMoments:
    """Same quantities as :func:`trunc_moments`, by adaptive quadrature.

    Used as an independent oracle for the closed forms. ``quad`` maps the
    infinite tails onto a finite interval itself.
    """
    lo, hi, d = p.x_alpha, p.x_beta, p.width

    def raw(k: int) -> float:
        value, _ = integrate.quad(
            lambda x: x ** k * std_normal_pdf(x),
            lo,
            hi,
            epsabs=QUAD_EPSABS,
            epsrel=QUAD_EPSREL,
            limit=200,
        )
        return value / d

    mu, m2, m3, m4 = raw(1), raw(2), raw(3), raw(4)
    sigma2 = m2 - mu * mu
    kappa = _central_fourth(mu, m2, m3, m4) / (sigma2 * sigma2)
    return TruncatedMoments(
        mu_tilde=mu, sigma2_tilde=sigma2, m2=m2, m3=m3, m4=m4, kappa_tilde=kappa
    )


def tau_sq_std(p: Partition) -> float:
    """Asymptotic variance of sqrt(n)(sigma^2_A hat - sigma^2_A), divided by sigma^4.

    Boundary terms at alpha = 0 or beta = 1 are dropped structurally
    (0 * inf = 0).
    """
    tm = trunc_moments(p)
    d = p.width
    s2 = tm.sigma2_tilde

    total = d * s2 * s2 * (tm.kappa_tilde - 1.0)
    c_a = c_b = 0.0
    if p.alpha > 0.0:
        c_a = (p.x_alpha - tm.mu_tilde) ** 2 - s2
        total += p.alpha * (1.0 - p.alpha) * c_a * c_a
    if p.beta < 1.0:
        c_b = (p.x_beta - tm.mu_tilde) ** 2 - s2
        total += p.beta * (1.0 - p.beta) * c_b * c_b
    if p.alpha > 0.0 and p.beta < 1.0:
        total -= 2.0 * p.alpha * (1.0 - p.beta) * c_a * c_b
    return total / (d * d)


def lmr_partitions(q: float) -> Tuple[Partition, Partition, Partition]:
    """Lower, middle and upper blocks for ratio ``q``."""
    return Partition(0.0, q), Partition(q, 1.0 - q), Partition(1.0 - q, 1.0)


def variance_gap(q: float) -> float:
    """sigma~^2_L - sigma~^2_M for ratio ``q``; zero at the balance ratio."""
    lower, middle, _ = lmr_partitions(q)
    return trunc_moments(lower).sigma2_tilde - trunc_moments(middle).sigma2_tilde


def _rho_closed_form() -> float:
    q = solve_qtilde().value
    x = solve_qtilde().root
    lower, middle, upper = lmr_partitions(q)
    tl, tm_, tr = trunc_moments(lower), trunc_moments(middle), trunc_moments(upper)

    # Block terms ((x +- mu~)^2 - sigma~^2) exactly as in the closed form.
    def c(sign: float, t: TruncatedMoments) -> float:
        return (x + sign * t.mu_tilde) ** 2 - t.sigma2_tilde

    c1 = q * q * c(-1, tl) * c(+1, tm_) - q * (1 - q) * c(-1, tm_) * c(-1, tl)
    c2 = q * q * c(+1, tr) * c(-1, tm_) - q * (1 - q) * c(+1, tm_) * c(+1, tr)
    c3 = -q * q * c(+1, tr) * c(-1, tl)

    radicand = (
        tau_sq_std(lower)
        + 4.0 * tau_sq_std(middle)
        + tau_sq_std(upper)
        - 4.0 * (c1 + c2) / (q * (1.0 - 2.0 * q))
        + 2.0 * c3 / (q * q)
    )
    return math.sqrt(radicand)


@functools.lru_cache(maxsize=None)
def rho() -> float:
    """Normalising constant of the N statistic (about 1.7885)."""
    value = _rho_closed_form()
    logger.debug("normalising constant rho=%.15f", value)
    return value


def lambda_tail() -> float:
    """Ratio of lower 20% conditional variance to overall variance for N(0, 1)."""
    x = std_normal_quantile(0.2)
    phi = std_normal_pdf(x)
    return 1.0 - x * phi / 0.2 - phi * phi / 0.04


# Influence functions: an independent route to tau^2 and rho


def influence(p: Partition, x: np.ndarray) -> np.ndarray:
    """Standardised influence function of the conditional variance estimator.

    psi(x) = ((x - mu~)^2 - sigma~^2) 1{x in A}
             + (1{x <= x_a} - alpha) ((x_a - mu~)^2 - sigma~^2)
             + (beta - 1{x <= x_b}) ((x_b - mu~)^2 - sigma~^2)
    """
    x = np.asarray(x, dtype=float)
    tm = trunc_moments(p)
    s2, mu = tm.sigma2_tilde, tm.mu_tilde
    xa, xb = p.x_alpha, p.x_beta

    inside = (x > xa) & (x <= xb)
    out = np.where(inside, (x - mu) ** 2 - s2, 0.0)
    if p.alpha > 0.0:
        out = out + ((x <= xa).astype(float) - p.alpha) * ((xa - mu) ** 2 - s2)
    if p.beta < 1.0:
        out = out + (p.beta - (x <= xb).astype(float)) * ((xb - mu) ** 2 - s2)
    return out


def _expect(fn: Callable[[float], float], breakpoints: Tuple[float, ...]) -> float:
    """E[fn(Z)] for Z ~ N(0, 1), integrating piecewise between breakpoints."""
    edges = [-math.inf, *sorted(b for b in breakpoints if math.isfinite(b)), math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        value, _ = integrate.quad(
            lambda z: fn(z) * std_normal_pdf(z),
            lo,
            hi,
            epsabs=QUAD_EPSABS,
            epsrel=QUAD_EPSREL,
            limit=200,
        )
        total += value
    return total


def _influence_covariance(p1: Partition, p2: Partition) -> float:
    """Cov(psi_A(Z), psi_B(Z)) by quadrature; both influences have mean zero."""
    breaks = (p1.x_alpha, p1.x_beta, p2.x_alpha, p2.x_beta)
    return _expect(
        lambda z: float(influence(p1, np.array([z]))[0] * influence(p2, np.array([z]))[0]),
        breaks,
    )


def tau_sq_by_quadrature(p: Partition) -> float:
    return _influence_covariance(p, p) / (p.width ** 2)


@functools.lru_cache(maxsize=None)
def rho_by_quadrature() -> float:
    """sqrt([1, -2, 1] Sigma [1, -2, 1]^T) with Sigma from influence covariances."""
    q = solve_qtilde().value
    blocks = lmr_partitions(q)
    weights = np.array([1.0 / q, -2.0 / (1.0 - 2.0 * q), 1.0 / q])
    cov = np.array(
        [[_influence_covariance(a, b) for b in blocks] for a in blocks], dtype=float
    )
    return math.sqrt(float(weights @ cov @ weights))
