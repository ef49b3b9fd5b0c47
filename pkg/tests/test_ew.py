import math

import numpy as np
import pytest
from scipy import integrate

from ewps import DomainError, EwParams, ew_cdf, ew_hazard, ew_moment, ew_pdf, ew_quantile, ew_sample
from ewps.errors import SurvivalUnderflowError

GRID = [EwParams(a, b, g) for a in (0.5, 1.0, 2.5) for g in (0.6, 1.0, 1.8) for b in (0.7,)]


def test_exponential_values():
    p = EwParams(1, 1, 1)
    assert ew_cdf(p, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    assert ew_cdf(p, 0.0) == 0.0
    assert ew_pdf(p, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert ew_pdf(EwParams(1, 1, 2), 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-15)


def test_hazard_examples():
    s, h = ew_hazard(EwParams(1, 1, 1), 2.0)
    assert s == pytest.approx(math.exp(-2)) and h == pytest.approx(1.0, rel=1e-14)
    s, h = ew_hazard(EwParams(1, 1, 2), 1.0)
    assert s == pytest.approx(math.exp(-1)) and h == pytest.approx(2.0, rel=1e-14)
    p = EwParams(2, 1, 0.5)
    s, h = ew_hazard(p, 1.0)
    assert h == pytest.approx(ew_pdf(p, 1.0) / (1 - ew_cdf(p, 1.0)), rel=1e-13)


def test_hazard_underflow():
    with pytest.raises(SurvivalUnderflowError):
        ew_hazard(EwParams(1, 1, 1), 800.0)


def test_domain_guards():
    with pytest.raises(DomainError):
        EwParams(0, 1, 1)
    with pytest.raises(DomainError):
        ew_cdf(EwParams(1, 1, 1), -1.0)
    with pytest.raises(DomainError):
        ew_pdf(EwParams(1, 1, 1), 0.0)
    with pytest.raises(DomainError):
        ew_quantile(EwParams(1, 1, 1), 1.0)


def test_cdf_matches_quadrature():
    p = EwParams(2, 0.5, 1.5)
    val, _ = integrate.quad(lambda x: ew_pdf(p, x), 0, 3, epsabs=0, epsrel=1e-12)
    assert ew_cdf(p, 3.0) == pytest.approx(val, rel=1e-10)


@pytest.mark.parametrize("p", GRID, ids=str)
def test_pdf_integrates_to_one(p):
    med = ew_quantile(p, 0.5)
    pieces = [integrate.quad(lambda x: ew_pdf(p, x), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
              for a, b in ((0, med), (med, np.inf))]
    assert sum(pieces) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("p", GRID, ids=str)
def test_quantile_round_trip(p):
    for q in (0.01, 0.1, 0.5, 0.9, 0.99):
        assert ew_cdf(p, ew_quantile(p, q)) == pytest.approx(q, abs=1e-10)


@pytest.mark.parametrize("p", GRID + [EwParams(3, 2, 0.7)], ids=str)
def test_pdf_is_derivative(p):
    for q in (0.1, 0.4, 0.8):
        x = ew_quantile(p, q)
        h = 1e-6 * x
        fd = (ew_cdf(p, x + h) - ew_cdf(p, x - h)) / (2 * h)
        assert ew_pdf(p, x) == pytest.approx(fd, rel=1e-6)


def test_quantile_examples():
    assert ew_quantile(EwParams(1, 1, 1), 1 - math.exp(-1)) == pytest.approx(1.0, rel=1e-14)
    assert ew_quantile(EwParams(2, 1, 1), 0.25) == pytest.approx(math.log(2), rel=1e-14)


def test_moments():
    assert ew_moment(EwParams(1, 1, 1), 1) == pytest.approx(1.0, rel=1e-12)
    assert ew_moment(EwParams(1, 1, 1), 2) == pytest.approx(2.0, rel=1e-12)
    p = EwParams(2.5, 0.8, 1.3)
    val, _ = integrate.quad(lambda x: x * ew_pdf(p, x), 0, np.inf, epsabs=0, epsrel=1e-11, limit=200)
    assert ew_moment(p, 1) == pytest.approx(val, rel=1e-6)


@pytest.mark.parametrize("alpha", [1, 2, 3, 5])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_closed_form_agrees_with_series(alpha, k):
    p = EwParams(alpha, 1.3, 0.8)
    assert ew_moment(p, k, "closed") == pytest.approx(ew_moment(p, k, "series"), rel=1e-12)


class _Half:
    def random(self, n):
        return np.full(n, 0.5)


def test_sampling():
    p = EwParams(1.7, 0.3, 2.2)
    assert ew_sample(p, _Half(), 1)[0] == pytest.approx(ew_quantile(p, 0.5))
    np.testing.assert_array_equal(ew_sample(p, 11, 50), ew_sample(p, 11, 50))
    x = ew_sample(EwParams(1, 1, 1), np.random.default_rng(3), 100_000)
    assert abs(x.mean() - 1.0) < 3 / math.sqrt(x.size)
