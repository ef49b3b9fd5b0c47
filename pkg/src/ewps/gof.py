"""Goodness-of-fit statistics and empirical curves for complete samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "GofReport",
    "ks_test",
    "kolmogorov_sf",
    "aic",
    "ad_cm",
    "empirical_ttt",
    "empirical_survival",
    "gof_report",
]


@dataclass(frozen=True)
class GofReport:
    ks: float
    ks_pvalue: float
    neg2loglik: float
    aic: float
    ad: float
    cm: float
    k_params: int


def _sorted(data) -> np.ndarray:
    vals = getattr(data, "sorted", None)
    if vals is None:
        vals = np.sort(np.asarray(data, dtype=float).ravel())
    return np.asarray(vals, dtype=float)


def _pit(data, cdf: Callable) -> np.ndarray:
    y = _sorted(data)
    u = np.asarray(cdf(y), dtype=float)
    if u.shape != y.shape or np.any(~np.isfinite(u)) or np.any((u < 0) | (u > 1)):
        raise DomainError("model cdf returned values outside [0, 1]")
    return u


def kolmogorov_sf(x: float, tol: float = 1e-12) -> float:
    """``P(K > x) = 2 sum_{k>=1} (-1)**(k-1) exp(-2 k**2 x**2)``.

    The alternating series is summed until a term drops below ``tol``.
    For small ``x`` the series converges slowly but the answer is 1 to
    double precision, so ``x < 0.2`` short-cuts.
    """
    if x < 0.2:
        return 1.0
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(max(2.0 * total, 0.0), 1.0)


def ks_test(data, cdf: Callable) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance and asymptotic p-value.

    ``D_n = max_i max(i/n - F(y_(i)), F(y_(i)) - (i-1)/n)``; the p-value is
    :func:`kolmogorov_sf` at ``sqrt(n) D_n``.
    """
    u = _pit(data, cdf)
    n = u.size
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return d, kolmogorov_sf(math.sqrt(n) * d)


def aic(neg2loglik: float, k: int) -> float:
    """Akaike information criterion ``-2 log L + 2k``."""
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    return neg2loglik + 2 * int(k)


def ad_cm(data, cdf: Callable) -> tuple[float, float]:
    """Anderson-Darling and Cramer-von Mises statistics of the PIT values.

    ``CM = sum (u_i - (2i-1)/(2n))**2 + 1/(12n)`` and
    ``AD = -n - (1/n) sum (2i-1) [log u_i + log(1 - u_{n+1-i})]``.
    """
    u = _pit(data, cdf)
    if np.any(u <= 0) or np.any(u >= 1):
        raise DomainError("a PIT value is 0 or 1 to working precision; AD is undefined")
    n = u.size
    i = np.arange(1, n + 1)
    cm = float(np.sum((u - (2 * i - 1) / (2.0 * n)) ** 2) + 1.0 / (12.0 * n))
    ad = float(-n - np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))) / n)
    return ad, cm


def empirical_ttt(data) -> np.ndarray:
    """Scaled total-time-on-test points ``(i/n, T_i)``, ``i = 0..n``.

    A concave polyline above the diagonal suggests an increasing hazard.
    """
    y = _sorted(data)
    n = y.size
    if n < 2:
        raise DomainError("the TTT transform needs at least two observations")
    i = np.arange(1, n + 1)
    # exact values never exceed 1; rounding can when the largest values tie
    t = np.minimum((np.cumsum(y) + (n - i) * y) / y.sum(), 1.0)
    t[-1] = 1.0
    return np.column_stack([np.r_[0.0, i / n], np.r_[0.0, t]])


def empirical_survival(data) -> np.ndarray:
    """Right-continuous survival steps ``(y, S(y))`` at the distinct values.

    Tied observations form one step whose drop is multiplicity / n.
    """
    y = _sorted(data)
    if y.size < 1:
        raise DomainError("need at least one observation")
    vals, counts = np.unique(y, return_counts=True)
    return np.column_stack([vals, 1.0 - np.cumsum(counts) / y.size])


def gof_report(data, cdf: Callable, neg2loglik: float, k: int) -> GofReport:
    """All statistics for one fitted model."""
    d, p = ks_test(data, cdf)
    ad, cm = ad_cm(data, cdf)
    return GofReport(ks=d, ks_pvalue=p, neg2loglik=float(neg2loglik), aic=aic(neg2loglik, k),
                     ad=ad, cm=cm, k_params=int(k))
