"""Reliability and shape functionals of the EWPS law.

Every quantity is defined by an integral and computed by adaptive
quadrature (see :func:`ewps.distribution.expect`). Where a series
representation exists it is available through ``method="series"`` as an
independent cross-check; the series are written from scratch and include
the binomial and exponent factors that a term-by-term expansion requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import betainc, betaln, gamma as gamma_fn, gammainc, gammaincc, xlogy

from ._numerics import alt_binom_sum, integrate_pieces, mp_table
from .distribution import (
    _BREAK_LEVELS,
    EwpsParams,
    ewps_cdf,
    ewps_logpdf,
    ewps_moment,
    ewps_quantile,
    ewps_survival,
    expect,
)
from .errors import ConvergenceError, DomainError, SurvivalUnderflowError
from .ew import EwParams, ew_moment
from .power_series import power_coeffs, ps_pmf, truncation_index

__all__ = [
    "IncompleteGammaPair",
    "INCOMPLETE_GAMMA",
    "renyi_entropy",
    "shannon_entropy",
    "order_stat_dist",
    "order_stat_moment",
    "residual_moment",
    "mean_residual_life",
    "reversed_residual_moment",
    "pwm",
    "mean_deviations",
    "inequality_curves",
    "integrated_cdf",
]


@dataclass(frozen=True)
class IncompleteGammaPair:
    """Unregularized lower ``Psi(s; t)`` and upper ``Phi(s; t)`` incomplete gammas."""

    def lower(self, s, t):
        return gammainc(s, t) * gamma_fn(s)

    def upper(self, s, t):
        return gammaincc(s, t) * gamma_fn(s)


INCOMPLETE_GAMMA = IncompleteGammaPair()


def _integrate_y(p: EwpsParams, func, lo: float = 0.0, hi: float = math.inf,
                 epsrel: float = 1e-12) -> float:
    """``int_lo^hi func(y) dy`` for a bounded integrand, split at model quantiles."""
    yb = np.asarray(ewps_quantile(p, np.array(_BREAK_LEVELS)))
    inner = [float(b) for b in yb if lo < b < hi]
    val, _ = integrate_pieces(func, [lo, *inner, hi], epsrel=epsrel, check_tol=1e-7)
    return val


def _n_range(p: EwpsParams, tol: float = 1e-15):
    return range(1, truncation_index(p.family, p.theta, tol) + 1)


# ------------------------------------------------------------------ entropy

def _renyi_integral_series(p: EwpsParams, r: float, tol: float = 1e-14, i_cap: int = 2000) -> float:
    # f**r expands with [C'(x)]**r = sum_i c_i x**i, D**(alpha(r+i)-r) binomially,
    # and z-integrals Gamma(a)/(r+j)**a with a = r - (r-1)/gamma.
    a = r - (r - 1.0) / p.gamma
    if a <= 0:
        raise ConvergenceError("Renyi series needs r - (r-1)/gamma > 0")
    w = np.exp(p.family.log_coeff(np.arange(1, i_cap + 2)) + np.log(np.arange(1, i_cap + 2)))
    c = power_coeffs(w, r, i_cap)
    total = 0.0
    quiet = 0
    for i in range(i_cap + 1):
        if c[i] == 0.0:
            quiet += 1
        else:
            x = p.alpha * (r + i) - r
            if x <= -1:
                raise ConvergenceError(f"binomial exponent {x:.3g} <= -1: f**r is not integrable at 0")
            s = alt_binom_sum(x, lambda j: mpmath.power(r + j, -a),
                              lambda j: (r + j) ** (-a), decay=a)
            term = c[i] * p.theta ** i * s
            total += term
            quiet = quiet + 1 if abs(term) < tol * abs(total) else 0
        if quiet >= 5 or (p.family.max_degree is not None and i > r * p.family.max_degree):
            break
    else:
        raise ConvergenceError("Renyi series did not converge", n_terms=i_cap)
    log_pref = (r * (math.log(p.alpha * p.theta) - math.log(p.c_theta))
                + (r - 1.0) * (math.log(p.gamma) + math.log(p.beta)) + math.lgamma(a))
    return math.exp(log_pref) * total


def renyi_entropy(p: EwpsParams, r: float, method: str = "quadrature") -> float:
    """``log(int f**r) / (1 - r)`` for ``r > 0``, ``r != 1``.

    ``int f**r = E[f(Y)**(r-1)]`` is computed by quadrature; ``series``
    uses the double power/binomial expansion.

    Raises
    ------
    IntegrabilityError
        If ``f**r`` is not integrable (quadrature cannot certify the value).
    """
    r = float(r)
    if not r > 0 or r == 1.0:
        raise DomainError("Renyi order r must be positive and different from 1")
    if method == "quadrature":
        integral = expect(p, lambda y: (r - 1.0) * ewps_logpdf(p, y), log_h=True)
    elif method == "series":
        integral = _renyi_integral_series(p, r)
    else:
        raise DomainError(f"unknown method {method!r}")
    return math.log(integral) / (1.0 - r)


def shannon_entropy(p: EwpsParams) -> float:
    """``E[-log f(Y)]``."""
    return expect(p, lambda y: -ewps_logpdf(p, y))


# -------------------------------------------------------- order statistics

def _check_rn(r: int, n: int):
    if int(r) != r or int(n) != n or not 1 <= r <= n:
        raise DomainError(f"need integers 1 <= r <= n, got r={r}, n={n}")


def order_stat_dist(p: EwpsParams, r: int, n: int, y):
    """Return ``(pdf, cdf)`` of the r-th smallest of n iid EWPS draws at y."""
    _check_rn(r, n)
    f_y = np.asarray(ewps_cdf(p, y))
    s_y = np.asarray(ewps_survival(p, y))
    logf = np.asarray(ewps_logpdf(p, y))
    with np.errstate(divide="ignore"):
        log_pdf = logf + xlogy(r - 1, f_y) + xlogy(n - r, s_y) - betaln(r, n - r + 1)
    pdf = np.exp(log_pdf)
    # sum_{k>=r} C(n,k) F**k S**(n-k) is the regularized incomplete beta
    cdf = betainc(r, n - r + 1, f_y)
    if pdf.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def order_stat_moment(p: EwpsParams, r: int, n: int, k: int, method: str = "quadrature") -> float:
    """``E[Y_{r:n}**k]``.

    ``series`` evaluates the finite survival-power representation
    ``k sum_{j=n-r+1}^{n} (-1)**(j-n+r-1) C(j-1, n-r) C(n, j) int y**(k-1) S**j dy``
    with each integral by quadrature.
    """
    _check_rn(r, n)
    if int(k) != k or k < 1:
        raise DomainError("moment order k must be a positive integer")
    if method == "quadrature":
        lb = betaln(r, n - r + 1)

        def h(y):
            f_y = float(ewps_cdf(p, y))
            s_y = float(ewps_survival(p, y))
            return y ** k * f_y ** (r - 1) * s_y ** (n - r) * math.exp(-lb)

        return expect(p, h)
    if method != "series":
        raise DomainError(f"unknown method {method!r}")
    total = 0.0
    for j in range(n - r + 1, n + 1):
        coef = (-1) ** (j - n + r - 1) * math.comb(j - 1, n - r) * math.comb(n, j)
        integral = _integrate_y(p, lambda y, j=j: y ** (k - 1) * float(ewps_survival(p, y)) ** j)
        total += coef * integral
    return k * total


# ------------------------------------------------------ partial moments

def _partial_moment_series(p: EwpsParams, s: int, t: float, upper: bool) -> float:
    """``int y**s f(y) dy`` over ``(t, inf)`` (upper) or ``(0, t)`` by series.

    Each mixture component ``EW(n alpha)`` contributes
    ``n alpha beta**-s sum_j (-1)**j C(n alpha - 1, j) (j+1)**-(1+s/gamma) Gam(1+s/gamma; (j+1) x)``
    with ``x = (beta t)**gamma`` and ``Gam`` the upper or lower incomplete gamma.
    """
    a = 1.0 + s / p.gamma
    x = (p.beta * t) ** p.gamma
    inc_np = INCOMPLETE_GAMMA.upper if upper else INCOMPLETE_GAMMA.lower

    def h_mp(j):
        arg = (j + 1) * x
        g = mpmath.gammainc(a, arg, mpmath.inf) if upper else mpmath.gammainc(a, 0, arg)
        return g * mpmath.power(j + 1, -a)

    def h_np(j):
        return inc_np(a, (j + 1.0) * x) * (j + 1.0) ** (-a)

    n_all = _n_range(p)
    table = mp_table(h_mp, n_all[-1] * p.alpha - 1.0)
    total = 0.0
    for n in n_all:
        w = ps_pmf(p.family, p.theta, n)
        if w == 0.0:
            continue
        na = n * p.alpha
        total += w * na * alt_binom_sum(na - 1.0, table.__getitem__, h_np, decay=a)
    return total * p.beta ** (-s)


def _residual_series(p: EwpsParams, t: float, r: int) -> float:
    total = 0.0
    for i in range(r + 1):
        total += math.comb(r, i) * (-t) ** i * _partial_moment_series(p, r - i, t, upper=True)
    return total


def _reversed_series(p: EwpsParams, t: float, r: int) -> float:
    total = 0.0
    for i in range(r + 1):
        total += math.comb(r, i) * t ** (r - i) * (-1) ** i * _partial_moment_series(p, i, t, upper=False)
    return total


def residual_moment(p: EwpsParams, t: float, r: int, method: str = "quadrature") -> float:
    """``E[(Y - t)**r | Y > t]``.

    Raises
    ------
    SurvivalUnderflowError
        If ``S(t)`` is 0 in double precision.
    """
    if int(r) != r or r < 1:
        raise DomainError("order r must be a positive integer")
    if t < 0:
        raise DomainError("t must be nonnegative")
    s_t = float(ewps_survival(p, t))
    if s_t <= 0.0:
        raise SurvivalUnderflowError(f"survival underflows at t={t}")
    if method == "quadrature":
        num = expect(p, lambda y: (y - t) ** r, lo=t)
    elif method == "series":
        num = _residual_series(p, t, int(r))
    else:
        raise DomainError(f"unknown method {method!r}")
    return num / s_t


def _integrated_cdf_series(p: EwpsParams, t: float) -> float:
    # F = sum_n P(N=n) D**(n alpha); the k = 0 term of the binomial expansion
    # of D**(n alpha) integrates to t, the rest to incomplete gammas.
    x = (p.beta * t) ** p.gamma
    s = 1.0 / p.gamma
    scale = p.beta * p.gamma

    def h_mp(k):
        if k == 0:
            return mpmath.mpf(t * scale)
        return mpmath.power(k, -s) * mpmath.gammainc(s, 0, k * x)

    def h_np(k):
        return k ** (-s) * INCOMPLETE_GAMMA.lower(s, k * x)

    n_all = _n_range(p)
    table = mp_table(h_mp, n_all[-1] * p.alpha)
    total = 0.0
    for n in n_all:
        w = ps_pmf(p.family, p.theta, n)
        if w == 0.0:
            continue
        total += w * alt_binom_sum(n * p.alpha, table.__getitem__, h_np, decay=s)
    return total / scale


def integrated_cdf(p: EwpsParams, t: float, method: str = "quadrature") -> float:
    """``I(t) = int_0^t F(y) dy``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    if method == "quadrature":
        return _integrate_y(p, lambda y: float(ewps_cdf(p, y)), 0.0, t)
    if method == "series":
        return _integrated_cdf_series(p, t)
    raise DomainError(f"unknown method {method!r}")


def mean_residual_life(p: EwpsParams, t: float, method: str = "quadrature") -> float:
    """``m(t) = (mu + I(t) - t) / S(t)``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    s_t = float(ewps_survival(p, t))
    if s_t <= 0.0:
        raise SurvivalUnderflowError(f"survival underflows at t={t}")
    mu = ewps_moment(p, 1)
    return (mu + integrated_cdf(p, t, method) - t) / s_t


def reversed_residual_moment(p: EwpsParams, t: float, r: int, method: str = "quadrature") -> float:
    """``E[(t - Y)**r | Y <= t]``, the moments of the time elapsed since failure."""
    if int(r) != r or r < 1:
        raise DomainError("order r must be a positive integer")
    if not t > 0:
        raise DomainError("t must be positive")
    f_t = float(ewps_cdf(p, t))
    if t < float(ewps_quantile(p, 1e-9)):
        raise DomainError(f"F(t) = {f_t:.3g} is below 1e-9; the conditional law is not resolved")
    if method == "quadrature":
        num = expect(p, lambda y: (t - y) ** r, hi=t)
    elif method == "series":
        num = _reversed_series(p, t, int(r))
    else:
        raise DomainError(f"unknown method {method!r}")
    return num / f_t


# --------------------------------------------------------------------- PWMs

def _pwm_series(p: EwpsParams, s: int, r: int, tol: float = 1e-14, deg_cap: int = 4000) -> float:
    # F**r f = C(theta)**-(r+1) sum_N b_N theta**N G**(N-1) g with
    # b_N = sum_n n a_n d_{N-r-n}, d the coefficients of (C(x)/x)**r, and
    # G**(N-1) g = f_EW(y; N alpha) / N.
    fam = p.family
    a = np.exp(fam.log_coeff(np.arange(1, deg_cap + 2)))
    n_idx = np.arange(1, deg_cap + 1)
    na = n_idx * a[:deg_cap]
    d = power_coeffs(a, r, deg_cap) if r > 0 else np.eye(1, deg_cap + 1)[0]
    total = 0.0
    quiet = 0
    n_top = fam.max_degree
    for big_n in range(r + 1, deg_cap + 1):
        m = big_n - r
        b = float(np.dot(na[:m], d[m - 1::-1][:m]))
        if b != 0.0:
            log_w = math.log(b) + big_n * math.log(p.theta) - math.log(big_n)
            term = math.exp(log_w) * ew_moment(EwParams(big_n * p.alpha, p.beta, p.gamma), s, method="series")
            total += term
            quiet = quiet + 1 if term < tol * total else 0
        else:
            quiet += 1
        if quiet >= 5 or (n_top is not None and big_n >= (r + 1) * n_top):
            return total / p.c_theta ** (r + 1)
    raise ConvergenceError("PWM series did not converge", n_terms=deg_cap)


def pwm(p: EwpsParams, s: int, r: int, method: str = "quadrature") -> float:
    """Probability weighted moment ``E[Y**s F(Y)**r]``."""
    if int(s) != s or s < 1 or int(r) != r or r < 0:
        raise DomainError("need integer s >= 1 and r >= 0")
    if method == "quadrature":
        if r == 0:
            return ewps_moment(p, int(s))
        return expect(p, lambda y: y ** s * float(ewps_cdf(p, y)) ** r)
    if method == "series":
        return _pwm_series(p, int(s), int(r))
    raise DomainError(f"unknown method {method!r}")


# ------------------------------------------------------ mean deviations

def _upper_first_moment(p: EwpsParams, b: float, method: str) -> float:
    if method == "quadrature":
        return expect(p, lambda y: y, lo=b)
    if method == "series":
        return _partial_moment_series(p, 1, b, upper=True)
    raise DomainError(f"unknown method {method!r}")


def mean_deviations(p: EwpsParams, method: str = "quadrature"):
    """Return ``(delta1, delta2)``, mean absolute deviations about mean and median.

    ``delta1 = 2 mu F(mu) - 2 mu + 2 L(mu)`` and ``delta2 = 2 L(M) - mu`` with
    ``L(b) = int_b^inf y f(y) dy`` and M the median.
    """
    mu = ewps_moment(p, 1)
    med = float(ewps_quantile(p, 0.5))
    l_mu = _upper_first_moment(p, mu, method)
    l_med = _upper_first_moment(p, med, method)
    delta1 = 2.0 * mu * float(ewps_cdf(p, mu)) - 2.0 * mu + 2.0 * l_mu
    delta2 = 2.0 * l_med - mu
    return delta1, delta2


# ------------------------------------------------------- inequality curves

def inequality_curves(p: EwpsParams, x: float):
    """Bonferroni, Lorenz and scaled TTT values at x, and the Gini index.

    Returns
    -------
    bonferroni, lorenz, ttt, gini : float
        ``B = L / F(x)``, ``L = int_0^x u f du / mu``,
        ``ttt = int_0^x S(u) du / mu`` and ``gini = 1 - int_0^inf S_F f dt``.
        The last integral equals ``int S**2 du / mu`` after swapping the
        order of integration, which is how it is evaluated.
    """
    if not x > 0:
        raise DomainError("x must be positive")
    f_x = float(ewps_cdf(p, x))
    if f_x <= 0.0:
        raise DomainError(f"F(x) is zero at x={x}")
    mu = ewps_moment(p, 1)
    lorenz = expect(p, lambda u: u, hi=x) / mu
    bonferroni = lorenz / f_x
    ttt = _integrate_y(p, lambda u: float(ewps_survival(p, u)), 0.0, x) / mu
    gini = 1.0 - _integrate_y(p, lambda u: float(ewps_survival(p, u)) ** 2) / mu
    return bonferroni, lorenz, ttt, gini
