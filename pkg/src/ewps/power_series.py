"""Zero-truncated power-series laws used as the compounding count N.

A power-series law has ``P(N = n) = a_n theta**n / C(theta)`` for ``n >= 1``
where ``C(theta) = sum_n a_n theta**n`` converges on ``0 < theta < s``.
Four families are shipped (geometric, Poisson, logarithmic, binomial) plus
a finite polynomial family for user-supplied coefficients.

Every family evaluates ``C`` and its first three derivatives in closed form;
the infinite series is never summed to evaluate ``C``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import DomainError

__all__ = [
    "PowerSeriesFamily",
    "Geometric",
    "Poisson",
    "Logarithmic",
    "Binomial",
    "Polynomial",
    "get_family",
    "eval_c",
    "inverse_c",
    "ps_pmf",
    "truncation_index",
    "power_coeffs",
]


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


class PowerSeriesFamily(ABC):
    """Abstract compounding law.

    Subclasses supply the coefficients ``a_n`` (as logs), ``C`` and its
    derivatives, and the closed-form inverse of ``C``.
    """

    name: str = "abstract"
    #: open upper bound ``s`` of the admissible theta interval
    support_upper: float = math.inf

    @property
    def max_degree(self) -> int | None:
        """Largest n with ``a_n > 0``; ``None`` for infinite series."""
        return None

    @property
    def min_degree(self) -> int:
        """Smallest n with ``a_n > 0``."""
        return 1

    @abstractmethod
    def log_coeff(self, n):
        """``log a_n`` for integer ``n >= 1`` (``-inf`` where ``a_n = 0``)."""

    @abstractmethod
    def _c(self, x, order):
        """Order-th derivative of C at ``x`` (no domain checks)."""

    @abstractmethod
    def _inverse(self, u):
        """Closed-form inverse of C on its image (no domain checks)."""

    def c(self, x, order: int = 0):
        """Evaluate ``C`` (order 0) or its derivatives up to order 3.

        Unlike :func:`eval_c`, ``x = 0`` is accepted, because the argument
        ``theta * G(y)`` reaches zero at ``y = 0``.
        """
        if order not in (0, 1, 2, 3):
            raise DomainError(f"order must be 0..3, got {order}")
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x >= self.support_upper) or np.any(~np.isfinite(x)):
            raise DomainError(f"{self.name}: argument outside [0, {self.support_upper})")
        return _scalar_or_array(self._c(x, order))

    def c_ratio(self, x):
        """Return ``(C''/C', C'''/C')`` at ``x``; used by score and information."""
        c1 = np.asarray(self.c(x, 1))
        return self.c(x, 2) / c1, self.c(x, 3) / c1

    def c_diff(self, theta: float, gbar):
        """``C(theta) - C(theta * (1 - gbar))`` without cancellation for small ``gbar``."""
        gbar = np.asarray(gbar, dtype=float)
        return _scalar_or_array(self._c_diff(float(theta), gbar))

    def _c_diff(self, theta, gbar):
        return self._c(np.float64(theta), 0) - self._c(theta * (1.0 - gbar), 0)

    @property
    def image_upper(self) -> float:
        """``lim C(theta)`` as theta approaches the support bound."""
        return math.inf

    def coefficients(self, n_max: int) -> np.ndarray:
        """Array ``[a_1, ..., a_{n_max}]``."""
        n = np.arange(1, n_max + 1)
        return np.exp(self.log_coeff(n))

    def check_theta(self, theta) -> float:
        theta = float(theta)
        if not (0.0 < theta < self.support_upper) or not math.isfinite(theta):
            raise DomainError(
                f"{self.name}: theta={theta!r} outside (0, {self.support_upper})"
            )
        return theta

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Geometric(PowerSeriesFamily):
    """``a_n = 1``, ``C(theta) = theta / (1 - theta)`` on ``(0, 1)``."""

    name: str = field(default="geometric", init=False)
    support_upper: float = field(default=1.0, init=False)

    def log_coeff(self, n):
        return np.zeros_like(np.asarray(n, dtype=float))

    def _c(self, x, order):
        if order == 0:
            return x / (1.0 - x)
        return math.factorial(order) / (1.0 - x) ** (order + 1)

    def _inverse(self, u):
        return u / (1.0 + u)

    def _c_diff(self, theta, gbar):
        return theta * gbar / ((1.0 - theta) * (1.0 - theta * (1.0 - gbar)))


@dataclass(frozen=True)
class Poisson(PowerSeriesFamily):
    """``a_n = 1/n!``, ``C(theta) = e**theta - 1`` on ``(0, inf)``."""

    name: str = field(default="poisson", init=False)
    support_upper: float = field(default=math.inf, init=False)

    def log_coeff(self, n):
        return -gammaln(np.asarray(n, dtype=float) + 1.0)

    def _c(self, x, order):
        return np.expm1(x) if order == 0 else np.exp(x)

    def _inverse(self, u):
        return np.log1p(u)

    def _c_diff(self, theta, gbar):
        return math.exp(theta) * -np.expm1(-theta * gbar)


@dataclass(frozen=True)
class Logarithmic(PowerSeriesFamily):
    """``a_n = 1/n``, ``C(theta) = -log(1 - theta)`` on ``(0, 1)``."""

    name: str = field(default="logarithmic", init=False)
    support_upper: float = field(default=1.0, init=False)

    def log_coeff(self, n):
        return -np.log(np.asarray(n, dtype=float))

    def _c(self, x, order):
        if order == 0:
            return -np.log1p(-x)
        return math.factorial(order - 1) / (1.0 - x) ** order

    def _inverse(self, u):
        return -np.expm1(-u)

    def _c_diff(self, theta, gbar):
        return np.log1p(theta * gbar / (1.0 - theta))


@dataclass(frozen=True)
class Binomial(PowerSeriesFamily):
    """``a_n = comb(m, n)``, ``C(theta) = (1 + theta)**m - 1`` on ``(0, inf)``.

    The inverse is ``(u + 1)**(1/m) - 1``. Table listings that print
    ``(theta - 1)**(1/m) - 1`` do not invert C.
    """

    m: int = 1
    name: str = field(default="binomial", init=False)
    support_upper: float = field(default=math.inf, init=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"binomial replica count must be a positive integer, got {self.m}")

    @property
    def max_degree(self):
        return int(self.m)

    def log_coeff(self, n):
        n = np.asarray(n, dtype=float)
        m = float(self.m)
        with np.errstate(invalid="ignore"):
            out = gammaln(m + 1) - gammaln(n + 1) - gammaln(np.maximum(m - n, 0) + 1)
        return np.where(n > m, -np.inf, out)

    def _c(self, x, order):
        m = self.m
        if order == 0:
            return np.expm1(m * np.log1p(x))
        k = m
        for i in range(1, order):
            k *= m - i
        if k == 0:
            return np.zeros_like(x)
        return k * (1.0 + x) ** (m - order)

    def _inverse(self, u):
        return np.expm1(np.log1p(u) / self.m)

    def _c_diff(self, theta, gbar):
        return (1.0 + theta) ** self.m * -np.expm1(self.m * np.log1p(-theta * gbar / (1.0 + theta)))

    def __str__(self):
        return f"binomial(m={self.m})"


@dataclass(frozen=True)
class Polynomial(PowerSeriesFamily):
    """Finite family with literal coefficients, e.g. ``C(theta) = theta + theta**20``.

    Parameters
    ----------
    coeffs : tuple of (int, float)
        ``(n, a_n)`` pairs with ``n >= 1`` and ``a_n >= 0``.
    """

    coeffs: tuple = ((1, 1.0),)
    name: str = field(default="polynomial", init=False)
    support_upper: float = field(default=math.inf, init=False)

    def __post_init__(self):
        pairs = tuple(sorted((int(n), float(a)) for n, a in self.coeffs if float(a) != 0.0))
        if not pairs or any(n < 1 or a < 0 for n, a in pairs):
            raise DomainError("polynomial family needs degrees >= 1 and nonnegative coefficients")
        object.__setattr__(self, "coeffs", pairs)

    @property
    def max_degree(self):
        return self.coeffs[-1][0]

    @property
    def min_degree(self):
        return self.coeffs[0][0]

    def log_coeff(self, n):
        table = dict(self.coeffs)
        n = np.atleast_1d(np.asarray(n))
        out = np.array([math.log(table[k]) if k in table else -math.inf for k in n.astype(int)])
        return out

    def _c(self, x, order):
        total = np.zeros_like(x)
        for n, a in self.coeffs:
            if n < order:
                continue
            k = a * math.perm(n, order)
            total = total + k * x ** (n - order)
        return total

    def _inverse(self, u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        for idx, val in np.ndenumerate(u):
            hi = 1.0
            while self._c(np.float64(hi), 0) < val:
                hi *= 2.0
            out[idx] = brentq(lambda t: float(self._c(np.float64(t), 0)) - val, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        return out

    def _c_diff(self, theta, gbar):
        total = np.zeros_like(gbar)
        for n, a in self.coeffs:
            total = total + a * theta ** n * -np.expm1(n * np.log1p(-gbar))
        return total

    def __str__(self):
        return "polynomial(" + ",".join(f"{n}:{a:g}" for n, a in self.coeffs) + ")"


def get_family(name: str, m: int | None = None, coeffs=None) -> PowerSeriesFamily:
    """Build a family from its (case-insensitive) name."""
    key = name.strip().lower()
    if key in ("geometric", "g", "ewg"):
        return Geometric()
    if key in ("poisson", "p", "ewp"):
        return Poisson()
    if key in ("logarithmic", "log", "l", "ewl"):
        return Logarithmic()
    if key in ("binomial", "b", "ewb"):
        return Binomial(m=10 if m is None else m)
    if key in ("polynomial", "poly"):
        if coeffs is None:
            raise DomainError("polynomial family needs coefficients")
        return Polynomial(coeffs=tuple(coeffs))
    raise DomainError(f"unknown power-series family {name!r}")


def eval_c(family: PowerSeriesFamily, theta, order: int = 0):
    """Closed-form ``C``, ``C'``, ``C''`` or ``C'''`` at theta in ``(0, s)``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta >= family.support_upper):
        raise DomainError(f"{family}: theta outside (0, {family.support_upper})")
    return family.c(theta, order)


def inverse_c(family: PowerSeriesFamily, u):
    """Return theta with ``C(theta) = u``."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0) or np.any(u >= family.image_upper) or np.any(~np.isfinite(u)):
        raise DomainError(f"{family}: u outside the image of C")
    return _scalar_or_array(family._inverse(u))


def ps_pmf(family: PowerSeriesFamily, theta, n):
    """``P(N = n) = a_n theta**n / C(theta)`` for the zero-truncated law."""
    theta = family.check_theta(theta)
    n_arr = np.asarray(n)
    if np.any(n_arr < 1) or np.any(n_arr != np.floor(n_arr)):
        raise DomainError("n must be a positive integer (zero-truncated law)")
    logp = family.log_coeff(n_arr) + n_arr * math.log(theta) - math.log(family.c(theta, 0))
    return _scalar_or_array(np.exp(logp))


def truncation_index(family: PowerSeriesFamily, theta: float, tol: float = 1e-14,
                     n_cap: int = 10_000_000) -> int:
    """Smallest N* with ``P(N > N*) < tol``.

    Finite families return their degree. For infinite ones, pmf values are
    accumulated in blocks; the stop also requires the pmf to be past its mode
    so that the remaining tail is dominated by a decreasing sequence.
    """
    theta = family.check_theta(theta)
    if family.max_degree is not None:
        return family.max_degree
    block = 256
    start = 1
    cum = 0.0
    while start < n_cap:
        n = np.arange(start, start + block)
        p = ps_pmf(family, theta, n)
        cs = cum + np.cumsum(p)
        # tail estimate: 1 - cumulative, but also bound by geometric ratio of terms
        ratio = p[1:] / np.where(p[:-1] > 0, p[:-1], 1.0)
        tail_geo = np.full_like(p, np.inf)
        ok = (ratio < 1) & (p[:-1] > 0)
        tail_geo[:-1][ok] = p[1:][ok] / (1 - ratio[ok])
        done = np.nonzero(((1.0 - cs) < tol) & (tail_geo < tol) | ((p == 0) & (cs > 0)))[0]
        if done.size:
            return int(n[done[0]])
        cum = cs[-1]
        start += block
        block *= 2
    raise DomainError(f"{family}: pmf tail does not fall below {tol} before n={n_cap}")


def power_coeffs(w, j, i_max: int) -> np.ndarray:
    """Coefficients ``c_0..c_{i_max}`` of ``(sum_i w_i u**i)**j``.

    Uses ``c_0 = w_0**j`` and
    ``c_i = (i w_0)**-1 sum_{m=1}^{i} (j m - i + m) w_m c_{i-m}``.
    The recurrence is valid for any real power ``j``, which the entropy
    series needs; the integer case is the usual one.
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0 or w[0] == 0:
        raise DomainError("power_coeffs needs w_0 != 0")
    if j <= 0:
        raise DomainError("power j must be positive")
    i_max = int(i_max)
    wp = np.zeros(i_max + 1)
    k = min(w.size, i_max + 1)
    wp[:k] = w[:k]
    c = np.zeros(i_max + 1)
    c[0] = w[0] ** j
    for i in range(1, i_max + 1):
        m = np.arange(1, i + 1)
        c[i] = np.sum((j * m - i + m) * wp[m] * c[i - m]) / (i * w[0])
    return c
