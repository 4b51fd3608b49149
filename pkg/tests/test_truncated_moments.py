import math

import numpy as np
import pytest

from normality.errors import InvalidPartition
from normality.normal_math import solve_qtilde
from normality.truncated_moments import (
    FULL,
    Partition,
    influence,
    lambda_tail,
    lmr_partitions,
    quadrature_moments,
    rho,
    rho_by_quadrature,
    tau_sq_by_quadrature,
    tau_sq_std,
    trunc_moments,
    variance_gap,
)


@pytest.mark.parametrize("alpha,beta", [(0.5, 0.5), (-0.1, 0.5), (0.2, 1.1), (0.6, 0.4)])
def test_invalid_partition(alpha, beta):
    with pytest.raises(InvalidPartition):
        Partition(alpha, beta)


def test_full_partition():
    assert FULL.is_full
    assert FULL.x_alpha == -math.inf and FULL.x_beta == math.inf
    tm = trunc_moments(FULL)
    assert tm.mu_tilde == 0.0
    assert tm.sigma2_tilde == pytest.approx(1.0)
    assert tm.kappa_tilde == pytest.approx(3.0)
    assert tau_sq_std(FULL) == pytest.approx(2.0)


def test_variances_balance_at_qtilde():
    lower, middle, upper = (trunc_moments(p) for p in lmr_partitions(solve_qtilde().value))
    assert abs(lower.sigma2_tilde - middle.sigma2_tilde) < 1e-9
    assert abs(upper.sigma2_tilde - middle.sigma2_tilde) < 1e-9
    assert lower.mu_tilde == pytest.approx(-upper.mu_tilde, abs=1e-12)


def test_closed_forms_agree_with_quadrature():
    rng = np.random.default_rng(2019)
    checked = 0
    while checked < 50:
        alpha, beta = np.sort(rng.uniform(0.0, 1.0, 2))
        if rng.random() < 0.2:
            alpha = 0.0
        elif rng.random() < 0.2:
            beta = 1.0
        if beta - alpha < 0.05:
            continue
        p = Partition(float(alpha), float(beta))
        closed, quad = trunc_moments(p), quadrature_moments(p)
        for field in ("mu_tilde", "sigma2_tilde", "m2", "m3", "m4"):
            assert getattr(closed, field) == pytest.approx(getattr(quad, field), abs=1e-9), (
                p,
                field,
            )
        assert closed.kappa_tilde == pytest.approx(quad.kappa_tilde, rel=1e-6)
        checked += 1


def test_reflection_symmetry():
    p = Partition(0.1, 0.35)
    a, b = trunc_moments(p), trunc_moments(p.reflect())
    assert a.mu_tilde == pytest.approx(-b.mu_tilde, abs=1e-12)
    assert a.sigma2_tilde == pytest.approx(b.sigma2_tilde, abs=1e-12)
    assert tau_sq_std(p) == pytest.approx(tau_sq_std(p.reflect()), rel=1e-10)


@pytest.mark.parametrize(
    "p",
    [Partition(0.0, 0.2), Partition(0.2, 0.8), Partition(0.7, 1.0), Partition(0.1, 0.6)],
)
def test_tau_sq_closed_form_matches_influence_variance(p):
    assert tau_sq_std(p) == pytest.approx(tau_sq_by_quadrature(p), rel=1e-7)


def test_influence_has_mean_zero():
    p = Partition(0.2, 0.8)
    z = np.random.default_rng(5).standard_normal(400_000)
    assert abs(influence(p, z).mean()) < 0.01


def test_rho_value():
    assert rho() == pytest.approx(1.7885, abs=5e-4)


def test_rho_routes_agree():
    assert rho_by_quadrature() == pytest.approx(rho(), rel=1e-6)


def test_lambda_tail():
    lower = trunc_moments(Partition(0.0, 0.2))
    assert lambda_tail() == pytest.approx(lower.sigma2_tilde, rel=1e-12)
    assert lambda_tail() == pytest.approx(0.2186, abs=3e-4)


def test_variance_gap():
    assert abs(variance_gap(solve_qtilde().value)) < 1e-10
    gap = variance_gap(0.2)
    assert gap > 0.0
    assert gap == pytest.approx(0.00405, abs=3e-4)


@pytest.mark.parametrize("p", [FULL, Partition(0.2, 0.8), Partition(0.45, 0.55)])
def test_symmetric_blocks_have_no_third_moment(p):
    tm = trunc_moments(p)
    assert tm.mu_tilde == pytest.approx(0.0, abs=1e-12)
    assert tm.m3 == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("p", [Partition(0.0, 0.2), Partition(0.1, 0.35), Partition(0.3, 0.9)])
def test_reflection_flips_skew_and_keeps_kurtosis(p):
    a, b = trunc_moments(p), trunc_moments(p.reflect())
    assert a.m3 == pytest.approx(-b.m3, abs=1e-12)
    assert a.m4 == pytest.approx(b.m4, abs=1e-12)
    assert a.kappa_tilde == pytest.approx(b.kappa_tilde, rel=1e-10)
