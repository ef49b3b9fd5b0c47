"""The exponentiated Weibull power-series (EWPS) distribution.

``Y = max(X_1, ..., X_N)`` with ``X_i ~ EW(alpha, beta, gamma)`` iid and N
drawn from a zero-truncated power-series law. Its cdf is
``C(theta G(y)) / C(theta)`` where ``G`` is the EW cdf.

Moments, MGF and all integral functionals are computed by adaptive
quadrature in the variable ``z = (beta y)**gamma``; the series forms are
kept as independent cross-check evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._numerics import as_output, integrate_pieces, log1mexp
from .errors import ConvergenceError, DomainError, SurvivalUnderflowError
from .ew import EwParams, _positive, _nonneg, _uniforms, ew_moment, ew_quantile, uniform_stream
from .power_series import PowerSeriesFamily, inverse_c, ps_pmf, truncation_index

__all__ = [
    "EwpsParams",
    "g_transform",
    "ewps_cdf",
    "ewps_logpdf",
    "ewps_pdf",
    "ewps_survival",
    "ewps_survival_hazard",
    "ewps_quantile",
    "ewps_sample",
    "ewps_moment",
    "ewps_mgf",
    "ewps_mean_var",
    "mixture_pdf",
    "ewps_cdf_min",
    "expect",
]


@dataclass(frozen=True)
class EwpsParams:
    """Parameters ``(alpha, beta, gamma, theta)`` and the compounding family."""

    alpha: float
    beta: float
    gamma: float
    theta: float
    family: PowerSeriesFamily

    def __post_init__(self):
        ew = EwParams(self.alpha, self.beta, self.gamma)
        object.__setattr__(self, "alpha", ew.alpha)
        object.__setattr__(self, "beta", ew.beta)
        object.__setattr__(self, "gamma", ew.gamma)
        object.__setattr__(self, "theta", self.family.check_theta(self.theta))

    @property
    def ew(self) -> EwParams:
        return EwParams(self.alpha, self.beta, self.gamma)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.theta])

    def replace(self, **changes) -> "EwpsParams":
        fields = dict(alpha=self.alpha, beta=self.beta, gamma=self.gamma,
                      theta=self.theta, family=self.family)
        fields.update(changes)
        return EwpsParams(**fields)

    @property
    def c_theta(self) -> float:
        return float(self.family.c(self.theta, 0))


def g_transform(p: EwpsParams, y):
    """Return ``(log G(y), 1 - G(y))`` with ``G = (1 - exp(-(beta y)**gamma))**alpha``."""
    y = _nonneg(y)
    z = (p.beta * y) ** p.gamma
    with np.errstate(divide="ignore"):
        log_g = p.alpha * log1mexp(z)
    return log_g, -np.expm1(log_g)


def ewps_cdf(p: EwpsParams, y):
    """``C(theta G(y)) / C(theta)``."""
    log_g, _ = g_transform(p, y)
    return as_output(p.family.c(p.theta * np.exp(log_g), 0) / p.c_theta)


def ewps_survival(p: EwpsParams, y):
    """``1 - F(y)`` computed as ``[C(theta) - C(theta G)] / C(theta)``."""
    _, gbar = g_transform(p, y)
    return as_output(p.family.c_diff(p.theta, gbar) / p.c_theta)


def ewps_logpdf(p: EwpsParams, y):
    y = _positive(y)
    z = (p.beta * y) ** p.gamma
    log_d = log1mexp(z)
    x = p.theta * np.exp(p.alpha * log_d)
    out = (math.log(p.theta * p.alpha * p.gamma) + p.gamma * math.log(p.beta)
           + (p.gamma - 1.0) * np.log(y) - z + (p.alpha - 1.0) * log_d
           + np.log(p.family.c(x, 1)) - math.log(p.c_theta))
    return as_output(out)


def ewps_pdf(p: EwpsParams, y):
    """Density ``theta g(y) C'(theta G(y)) / C(theta)`` for ``y > 0``."""
    return as_output(np.exp(ewps_logpdf(p, y)))


def ewps_survival_hazard(p: EwpsParams, y):
    """Return ``(survival, hazard)``; hazard is ``pdf / survival``."""
    y = _positive(y)
    s = np.asarray(ewps_survival(p, y))
    if np.any(s <= 0):
        raise SurvivalUnderflowError("EWPS survival underflowed; hazard undefined")
    h = np.exp(np.asarray(ewps_logpdf(p, y)) - np.log(s))
    return as_output(s), as_output(h)


def ewps_quantile(p: EwpsParams, q):
    """``G^{-1}(C^{-1}(q C(theta)) / theta)``; the median is ``q = 0.5``."""
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    w = np.asarray(inverse_c(p.family, q * p.c_theta)) / p.theta
    w = np.clip(w, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return as_output(ew_quantile(p.ew, w))


def _count_table(p: EwpsParams, tol: float = 1e-16):
    n_star = truncation_index(p.family, p.theta, tol)
    n = np.arange(1, n_star + 1)
    cdf = np.cumsum(ps_pmf(p.family, p.theta, n))
    return n, cdf / cdf[-1]


def sample_counts(p: EwpsParams, rng, size: int) -> np.ndarray:
    """Draw N from the power-series law by inversion of its pmf table."""
    n, cdf = _count_table(p)
    u = _uniforms(uniform_stream(rng), size)
    idx = np.minimum(np.searchsorted(cdf, u, side="left"), n.size - 1)
    return n[idx]


def ewps_sample(p: EwpsParams, rng, n: int, method: str = "inverse") -> np.ndarray:
    """Draw n lifetimes.

    ``inverse`` applies :func:`ewps_quantile` to uniforms; ``compound``
    draws N and returns the maximum of N EW variates, mirroring the
    construction of the family.
    """
    if n < 1:
        raise DomainError("sample size must be positive")
    stream = uniform_stream(rng)
    if method == "inverse":
        return np.atleast_1d(ewps_quantile(p, _uniforms(stream, n)))
    if method == "compound":
        counts = sample_counts(p, stream, n)
        draws = np.atleast_1d(ew_quantile(p.ew, _uniforms(stream, int(counts.sum()))))
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        return np.maximum.reduceat(draws, starts)
    raise DomainError(f"unknown sampling method {method!r}")


# ---------------------------------------------------------------- quadrature

_BREAK_LEVELS = (1e-9, 1e-5, 1e-3, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98, 0.999, 0.99999, 1 - 1e-9)


def _log_zdensity(p: EwpsParams, z):
    """Log density of ``Z = (beta Y)**gamma`` (no Jacobian left over)."""
    log_d = log1mexp(z)
    x = p.theta * np.exp(p.alpha * log_d)
    return (math.log(p.theta * p.alpha) - z + (p.alpha - 1.0) * log_d
            + np.log(p.family.c(x, 1)) - math.log(p.c_theta))


def z_breaks(p: EwpsParams):
    y = np.asarray(ewps_quantile(p, np.array(_BREAK_LEVELS)))
    return (p.beta * y) ** p.gamma


def _decade_fill(breaks):
    """Insert powers-of-ten points where neighbours differ by more than 100x.

    QUADPACK's extrapolation assumes an endpoint singularity sits at the
    endpoint itself; a piece ``[a, b]`` with ``a << b`` and a singularity
    just below ``a`` is otherwise integrated as if it started at 0.
    """
    out = [breaks[0]]
    for b in breaks[1:]:
        a = out[-1]
        if a > 0 and b / a > 100.0:
            k = math.floor(math.log10(a)) + 1
            while 10.0 ** k < b / 10.0:
                if 10.0 ** k > 10.0 * a:
                    out.append(10.0 ** k)
                k += 1
        out.append(b)
    return out


def expect(p: EwpsParams, h, lo: float = 0.0, hi: float = math.inf, *,
           log_h: bool = False, epsrel: float = 1e-12,
           check_tol: float | None = 1e-7) -> float:
    """``E[h(Y); lo < Y < hi]`` by adaptive quadrature in ``z = (beta y)**gamma``.

    ``h`` receives a scalar lifetime ``y``. With ``log_h=True`` it returns
    ``log h(y)`` instead, which keeps integrands such as ``f**(r-1)`` from
    overflowing where the density underflows. The z-axis is split at model
    quantiles. Below the median the variable is ``w = z**alpha``, which
    removes the ``z**(alpha - 1)`` behaviour of the density at the origin.
    """
    z_lo = 0.0 if lo <= 0 else (p.beta * lo) ** p.gamma
    z_hi = math.inf if hi == math.inf else (p.beta * hi) ** p.gamma
    zb = z_breaks(p)
    z_mid = zb[len(zb) // 2]
    inv_g = 1.0 / p.gamma
    inv_a = 1.0 / p.alpha

    def weighted(z, log_jac):
        y = z ** inv_g / p.beta
        log_w = _log_zdensity(p, z) + log_jac
        if log_h:
            lv = h(y)
            return 0.0 if lv == -math.inf else math.exp(lv + log_w)
        val = h(y)
        return 0.0 if val == 0.0 else val * math.exp(log_w)

    def in_z(z):
        return 0.0 if z <= 0.0 else weighted(z, 0.0)

    def in_w(w):
        if w <= 0.0:
            return 0.0
        z = w ** inv_a
        if z <= 0.0:
            return 0.0
        # dz = z / (alpha w) dw
        return weighted(z, math.log(z) - math.log(p.alpha * w))

    total = 0.0
    lower_top = min(z_mid, z_hi)
    if z_lo < lower_top:
        inner = [b ** p.alpha for b in zb if z_lo < b < lower_top]
        breaks = _decade_fill([z_lo ** p.alpha, *inner, lower_top ** p.alpha])
        total += integrate_pieces(in_w, breaks, epsrel=epsrel, check_tol=check_tol)[0]
    upper_bottom = max(z_mid, z_lo)
    if upper_bottom < z_hi:
        inner = [b for b in zb if upper_bottom < b < z_hi]
        breaks = [upper_bottom, *inner, z_hi]
        total += integrate_pieces(in_z, breaks, epsrel=epsrel, check_tol=check_tol)[0]
    return total


def _moment_quad(p: EwpsParams, k: int) -> float:
    return expect(p, lambda y: y ** k)


def _moment_series(p: EwpsParams, k: int, tol: float = 1e-14) -> float:
    """``sum_n P(N=n) E[X_(n)**k]`` with each term the EW(n alpha) moment series."""
    n_star = truncation_index(p.family, p.theta, tol)
    total = 0.0
    for n in range(1, n_star + 1):
        w = ps_pmf(p.family, p.theta, n)
        if w == 0.0:
            continue
        total += w * ew_moment(EwParams(n * p.alpha, p.beta, p.gamma), k, method="series")
    return total


def ewps_moment(p: EwpsParams, k: int, method: str = "quadrature") -> float:
    """k-th raw moment by ``quadrature`` (default) or the double ``series``.

    Raises
    ------
    ConvergenceError
        From the series path when an inner sum stalls; callers can fall back
        to quadrature.
    """
    if int(k) != k or k < 1:
        raise DomainError("moment order k must be a positive integer")
    if method == "quadrature":
        return _moment_quad(p, int(k))
    if method == "series":
        return _moment_series(p, int(k))
    raise DomainError(f"unknown method {method!r}")


def _check_mgf_domain(p: EwpsParams, t: float):
    if t > 0 and p.gamma < 1:
        raise DomainError("MGF does not exist for t > 0 when gamma < 1")
    if t > 0 and p.gamma == 1 and t >= p.beta:
        raise DomainError("MGF exists only for t < beta when gamma = 1")


def ewps_mgf(p: EwpsParams, t: float, method: str = "quadrature", *,
             i_cap: int = 120) -> float:
    """``E exp(tY)``.

    The series method sums ``t**i / i! * E Y**i`` with series moments; it
    converges only inside the radius set by the tail (all t for
    ``gamma > 1``, ``|t| < beta`` for ``gamma = 1``) and raises
    :class:`ConvergenceError` otherwise.
    """
    t = float(t)
    _check_mgf_domain(p, t)
    if t == 0.0:
        return 1.0
    if method == "quadrature":
        return expect(p, lambda y: math.exp(t * y))
    if method != "series":
        raise DomainError(f"unknown method {method!r}")
    total = 1.0
    small = 0
    prev = math.inf
    for i in range(1, i_cap + 1):
        log_scale = i * math.log(abs(t)) - gammaln(i + 1)
        term = math.copysign(1.0, t) ** i * math.exp(log_scale) * _moment_series(p, i)
        total += term
        if abs(term) > 10 * prev and i > 5:
            raise ConvergenceError("MGF series terms are growing", n_terms=i, last_term=abs(term))
        prev = abs(term)
        small = small + 1 if abs(term) < 1e-14 * abs(total) else 0
        if small >= 3:
            return total
    raise ConvergenceError("MGF series did not converge", n_terms=i_cap, last_term=prev)


def ewps_mean_var(p: EwpsParams, method: str = "quadrature"):
    """Return ``(mean, variance)`` with variance ``E Y**2 - (E Y)**2``."""
    m1 = ewps_moment(p, 1, method)
    m2 = ewps_moment(p, 2, method)
    return m1, m2 - m1 * m1


def mixture_pdf(p: EwpsParams, y, n_max: int):
    """Truncated mixture ``sum_{n<=n_max} P(N=n) f_EW(y; n alpha, beta, gamma)``.

    ``f_EW(.; n alpha)`` is also the density of the largest of n EW draws, so
    this is the order-statistic mixture form of the density.
    """
    if int(n_max) != n_max or n_max < 1:
        raise DomainError("n_max must be a positive integer")
    y = _positive(y)
    z = (p.beta * y) ** p.gamma
    log_d = log1mexp(z)
    base = math.log(p.gamma) + p.gamma * math.log(p.beta) + (p.gamma - 1) * np.log(y) - z
    total = np.zeros_like(np.asarray(y, dtype=float))
    hi = int(n_max) if p.family.max_degree is None else min(int(n_max), p.family.max_degree)
    for n in range(1, hi + 1):
        w = ps_pmf(p.family, p.theta, n)
        if w == 0.0:
            continue
        na = n * p.alpha
        total = total + w * np.exp(math.log(na) + base + (na - 1.0) * log_d)
    return as_output(total)


def ewps_cdf_min(p: EwpsParams, y):
    """cdf of ``min(X_1, ..., X_N)``: ``1 - C(theta (1 - G(y))) / C(theta)``."""
    log_g, gbar = g_transform(p, y)
    # C(theta) - C(theta * gbar) = c_diff with argument G
    return as_output(p.family.c_diff(p.theta, np.exp(log_g)) / p.c_theta)
