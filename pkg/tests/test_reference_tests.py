import numpy as np
import pytest
from scipy import stats

from normality.empirical import Sample
from normality.errors import DegenerateVariance, DomainError, SampleTooLarge, SampleTooSmall
from normality.reference_tests import (
    RefTestKind,
    anderson_darling,
    anderson_darling_batch,
    anderson_darling_pvalue,
    jarque_bera,
    jarque_bera_batch,
    jarque_bera_pvalue,
    reference_test,
    shapiro_wilk,
    shapiro_wilk_batch,
    shapiro_wilk_coefficients,
)


@pytest.fixture
def normal_sample(rng):
    return rng.standard_normal(120)


def test_jarque_bera_matches_scipy(normal_sample):
    expected = stats.jarque_bera(normal_sample)
    assert jarque_bera(Sample(normal_sample)) == pytest.approx(expected.statistic, rel=1e-10)
    assert jarque_bera_pvalue(expected.statistic) == pytest.approx(expected.pvalue, rel=1e-10)


def test_anderson_darling_matches_scipy(normal_sample):
    expected = stats.anderson(normal_sample, dist="norm").statistic
    assert anderson_darling(Sample(normal_sample)) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("n", [20, 100, 1000])
def test_shapiro_wilk_matches_scipy(n):
    x = np.random.default_rng(n).standard_normal(n)
    assert shapiro_wilk(Sample(x)) == pytest.approx(stats.shapiro(x).statistic, abs=1e-4)


def test_shapiro_wilk_coefficients():
    a = shapiro_wilk_coefficients(50)
    assert a @ a == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(a, -a[::-1], atol=1e-12)
    assert a[-1] > a[-2] > 0.0
    assert not a.flags.writeable


def test_batches_match_single_samples(rng):
    batch = rng.standard_normal((4, 60))
    for fn_batch, fn in (
        (jarque_bera_batch, jarque_bera),
        (anderson_darling_batch, anderson_darling),
        (shapiro_wilk_batch, shapiro_wilk),
    ):
        values = fn_batch(batch)
        for row, value in zip(batch, values):
            assert fn(Sample(row)) == pytest.approx(value, rel=1e-12)


def test_shift_and_scale_invariance(normal_sample):
    s = Sample(normal_sample)
    moved = s.affine(3.0, -2.0)
    assert jarque_bera(moved) == pytest.approx(jarque_bera(s), rel=1e-9)
    assert anderson_darling(moved) == pytest.approx(anderson_darling(s), rel=1e-9)
    assert shapiro_wilk(moved) == pytest.approx(shapiro_wilk(s), rel=1e-9)


def test_anderson_darling_pvalue_is_monotone():
    ps = [anderson_darling_pvalue(a, 100) for a in (0.1, 0.3, 0.5, 1.0, 2.0)]
    assert all(0.0 <= p <= 1.0 for p in ps)
    assert ps == sorted(ps, reverse=True)


def test_size_limits():
    with pytest.raises(SampleTooSmall):
        jarque_bera(Sample(np.arange(5.0)))
    with pytest.raises(SampleTooLarge):
        shapiro_wilk_coefficients(5001)


def test_constant_sample():
    with pytest.raises(DegenerateVariance):
        jarque_bera(Sample(np.ones(30)))


def test_reference_test_rejects_skewed_data(rng):
    s = Sample(rng.exponential(size=500))
    for kind in RefTestKind:
        outcome = reference_test(kind, s, 0.05)
        assert outcome.reject, kind
        assert outcome.p_value < 0.05


def test_reference_test_sides_and_level(normal_sample):
    s = Sample(normal_sample)
    assert reference_test(RefTestKind.SW, s).side.value == "left"
    assert reference_test(RefTestKind.JB, s).critical_values[0] == pytest.approx(
        stats.chi2.ppf(0.95, 2)
    )
    with pytest.raises(DomainError):
        reference_test(RefTestKind.AD, s, 0.0)
