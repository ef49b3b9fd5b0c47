import math

import numpy as np
import pytest
from scipy import integrate, special

from ewps import DomainError, EwpsParams, Geometric, Poisson, ewps_cdf, ewps_moment, ewps_pdf, ewps_quantile, ewps_sample
from ewps.analytics import (INCOMPLETE_GAMMA, inequality_curves, integrated_cdf, mean_deviations,
                            mean_residual_life, order_stat_dist, order_stat_moment, pwm, renyi_entropy,
                            residual_moment, reversed_residual_moment, shannon_entropy)

EXP = EwpsParams(1, 1, 1, 1e-12, Geometric())
GEO = EwpsParams(2, 1, 1.5, 0.5, Geometric())
POI = EwpsParams(2, 1, 1, 1, Poisson())
GEO1 = EwpsParams(2, 1, 1, 0.5, Geometric())


def test_incomplete_gamma_pair():
    for s in (0.3, 1.0, 2.5, 7.0):
        for t in (0.01, 1.0, 5.0, 30.0):
            total = INCOMPLETE_GAMMA.lower(s, t) + INCOMPLETE_GAMMA.upper(s, t)
            assert total == pytest.approx(special.gamma(s), rel=1e-12)


def test_entropies_exponential_limit():
    assert renyi_entropy(EXP, 2) == pytest.approx(math.log(2), abs=1e-8)
    assert shannon_entropy(EXP) == pytest.approx(1.0, abs=1e-8)


def test_renyi_series_cross_check():
    assert renyi_entropy(GEO, 0.5, "series") == pytest.approx(renyi_entropy(GEO, 0.5), rel=1e-4)
    assert renyi_entropy(POI, 3, "series") == pytest.approx(renyi_entropy(POI, 3), rel=1e-4)


def test_renyi_approaches_shannon():
    h = shannon_entropy(GEO)
    assert abs(renyi_entropy(GEO, 1.001) - h) < 1e-3
    assert abs(renyi_entropy(GEO, 1.01) - h) < 1e-2
    with pytest.raises(DomainError):
        renyi_entropy(GEO, 1.0)


def test_shannon_scale_shift():
    assert shannon_entropy(GEO.replace(beta=2.0)) == pytest.approx(shannon_entropy(GEO) - math.log(2), abs=1e-9)


def test_shannon_monte_carlo():
    y = ewps_sample(POI, np.random.default_rng(8), 200_000)
    vals = -np.log(ewps_pdf(POI, y))
    se = vals.std() / math.sqrt(y.size)
    assert abs(vals.mean() - shannon_entropy(POI)) < 3 * se


def test_order_statistics():
    y = 0.8
    pdf, cdf = order_stat_dist(GEO, 1, 1, y)
    assert pdf == pytest.approx(ewps_pdf(GEO, y)) and cdf == pytest.approx(ewps_cdf(GEO, y))
    _, cdf = order_stat_dist(GEO, 3, 3, y)
    assert cdf == pytest.approx(ewps_cdf(GEO, y) ** 3, rel=1e-13)
    med = ewps_quantile(GEO, 0.5)
    h = 1e-6 * med
    fd = (order_stat_dist(GEO, 2, 5, med + h)[1] - order_stat_dist(GEO, 2, 5, med - h)[1]) / (2 * h)
    assert order_stat_dist(GEO, 2, 5, med)[0] == pytest.approx(fd, rel=1e-6)
    with pytest.raises(DomainError):
        order_stat_dist(GEO, 4, 3, y)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_order_stat_pdf_integrates(r):
    val, _ = integrate.quad(lambda y: order_stat_dist(GEO, r, 3, y)[0], 0, np.inf, epsabs=0, epsrel=1e-10, limit=200)
    assert val == pytest.approx(1.0, abs=1e-7)


def test_order_stat_moments():
    assert order_stat_moment(GEO, 1, 1, 1) == pytest.approx(ewps_moment(GEO, 1), rel=1e-10)
    assert order_stat_moment(EXP, 1, 3, 1) == pytest.approx(1 / 3, rel=1e-8)
    assert order_stat_moment(GEO, 2, 4, 2, "series") == pytest.approx(order_stat_moment(GEO, 2, 4, 2), rel=1e-6)


def test_order_stat_monte_carlo():
    x = np.sort(ewps_sample(GEO, np.random.default_rng(4), (200_000, 4)).reshape(-1, 4), axis=1)[:, 1] ** 2 \
        if False else np.sort(ewps_sample(GEO, np.random.default_rng(4), 800_000).reshape(-1, 4), axis=1)[:, 1] ** 2
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - order_stat_moment(GEO, 2, 4, 2)) < 3 * se


def test_residual_life():
    assert residual_moment(GEO, 0.0, 1) == pytest.approx(ewps_moment(GEO, 1), rel=1e-10)
    for t in (0.5, 2.0):
        assert residual_moment(EXP, t, 1) == pytest.approx(1.0, rel=1e-8)
    med = ewps_quantile(GEO, 0.5)
    assert residual_moment(GEO, med, 2, "series") == pytest.approx(residual_moment(GEO, med, 2), rel=1e-4)
    assert mean_residual_life(GEO, 0.0) == pytest.approx(ewps_moment(GEO, 1), rel=1e-12)
    assert mean_residual_life(EXP, 2.0) == pytest.approx(1.0, rel=1e-8)
    assert mean_residual_life(POI, 1.0) == pytest.approx(residual_moment(POI, 1.0, 1), rel=1e-10)
    assert mean_residual_life(POI, 1.0, "series") == pytest.approx(residual_moment(POI, 1.0, 1), rel=1e-8)


@pytest.mark.parametrize("t", [0.2, 0.7, 1.5, 3.0])
def test_mrl_equals_residual_mean(t):
    assert residual_moment(GEO, t, 1) == pytest.approx(mean_residual_life(GEO, t), rel=1e-10)


def test_integrated_cdf_series():
    assert integrated_cdf(GEO, 1.2, "series") == pytest.approx(integrated_cdf(GEO, 1.2), rel=1e-8)


def test_reversed_residual():
    med = ewps_quantile(GEO1, 0.5)
    q = reversed_residual_moment(GEO1, med, 1)
    assert reversed_residual_moment(GEO1, med, 1, "series") == pytest.approx(q, rel=1e-4)
    far = 60.0
    assert reversed_residual_moment(GEO1, far, 1) == pytest.approx(far - ewps_moment(GEO1, 1), rel=1e-8)
    with pytest.raises(DomainError):
        reversed_residual_moment(GEO1, ewps_quantile(GEO1, 1e-11), 1)


def test_pwm():
    assert pwm(GEO, 1, 0) == pytest.approx(ewps_moment(GEO, 1), rel=1e-8)
    assert pwm(EXP, 1, 1) == pytest.approx(0.75, rel=1e-8)
    assert pwm(POI, 2, 1, "series") == pytest.approx(pwm(POI, 2, 1), rel=1e-4)
    assert pwm(GEO, 1, 3, "series") == pytest.approx(pwm(GEO, 1, 3), rel=1e-4)


def test_mean_deviations():
    d1, d2 = mean_deviations(EXP)
    m = math.log(2)
    assert d1 == pytest.approx(2 / math.e, rel=1e-8)
    assert d2 == pytest.approx(2 * (m + 1) * math.exp(-m) - 1, rel=1e-8)
    mu = ewps_moment(GEO1, 1)
    med = ewps_quantile(GEO1, 0.5)
    oracle = []
    for c in (mu, med):
        parts = [integrate.quad(lambda y: abs(y - c) * ewps_pdf(GEO1, y), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
                 for a, b in ((0, c), (c, np.inf))]
        oracle.append(sum(parts))
    d1, d2 = mean_deviations(GEO1)
    assert (d1, d2) == pytest.approx(tuple(oracle), rel=1e-6)
    assert d1 >= d2 >= 0
    assert mean_deviations(GEO1, "series") == pytest.approx((d1, d2), rel=1e-6)


def test_inequality_curves():
    b, l, t, g = inequality_curves(EXP, 1.0)
    assert g == pytest.approx(0.5, abs=1e-8)
    assert b == pytest.approx(l / ewps_cdf(EXP, 1.0), rel=1e-13)
    far = ewps_quantile(GEO, 1 - 1e-13)
    _, l_far, t_far, _ = inequality_curves(GEO, far)
    assert l_far == pytest.approx(1.0, abs=1e-9)
    assert t_far == pytest.approx(1.0, abs=1e-9)
    qs = np.linspace(0.05, 0.95, 10)
    lor = np.array([inequality_curves(GEO, ewps_quantile(GEO, q))[1] for q in qs])
    assert np.all(lor < qs)
    assert np.all(np.diff(lor, 2) > 0)
