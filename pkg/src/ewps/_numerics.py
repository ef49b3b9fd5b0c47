"""Numerical primitives: stable exponentials, generalized binomials,
alternating binomial series and adaptive quadrature wrappers."""

from __future__ import annotations

import math
import warnings

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import gammaln, gammasgn

from .errors import ConvergenceError, IntegrabilityError

LOG_HALF = -math.log(2.0)


def log1mexp(z):
    """``log(1 - exp(-z))`` for ``z > 0`` without cancellation."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(z < -LOG_HALF, np.log(-np.expm1(-z)), np.log1p(-np.exp(-z)))


def as_output(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def gbinom(x: float, j):
    """Generalized binomial coefficient ``C(x, j)`` for real x and integer j >= 0.

    Evaluated through log-gamma with explicit sign tracking; exact zeros
    are returned when x is a nonnegative integer and ``j > x``.
    """
    j = np.asarray(j, dtype=float)
    if float(x).is_integer() and x >= 0:
        out = np.exp(gammaln(x + 1) - gammaln(j + 1) - gammaln(np.maximum(x - j, 0) + 1))
        return np.where(j > x, 0.0, out)
    sign = gammasgn(x + 1) * gammasgn(x - j + 1)
    return sign * np.exp(gammaln(x + 1) - gammaln(j + 1) - gammaln(x - j + 1))


def _is_nonneg_int(x: float) -> bool:
    return x >= 0 and abs(x - round(x)) < 1e-12


def head_layout(x: float):
    """Return ``(last head index, mpmath digits)`` used by :func:`alt_binom_sum`.

    The digit count covers the cancellation among head terms, about
    ``log10`` of the largest binomial coefficient.
    """
    if _is_nonneg_int(x):
        head_end = int(round(x))
    else:
        head_end = max(int(math.floor(x)) + 1, 0)
    big = float(gammaln(abs(x) + 1) - 2 * gammaln(abs(x) / 2 + 1)) / math.log(10) if x > 1 else 0.0
    return head_end, int(30 + max(big, 0) * 1.1)


def mp_table(func, x_max: float):
    """Tabulate ``func(j)`` for the head indices of every ``x <= x_max``.

    Head terms that do not depend on x can then be shared between many
    sums; values are computed once at the largest precision required.
    """
    head_end, dps = head_layout(x_max)
    with mpmath.workdps(dps):
        return [func(j) for j in range(head_end + 1)]


def alt_binom_sum(x: float, term_mp, term_np, decay: float) -> float:
    """Evaluate ``sum_{j>=0} (-1)**j C(x, j) h(j)`` with ``x > -1``.

    The head of the sum (``j <= x + 1``) alternates with huge binomials, so it
    runs in mpmath at a working precision sized to the largest term. Past
    ``x + 1`` the summands keep one sign and behave like
    ``j**-(x + 1 + decay) * (c0 + c1/j + ...)``, so the partial sums converge
    far too slowly to finish directly. They are taken at ``J, 2J, ..., 64J``
    and the known power-law remainder is removed by Richardson extrapolation.

    Parameters
    ----------
    x : float
        Upper argument of the binomial coefficient.
    term_mp : callable
        ``h(j)`` for integer j, returning an mpmath number.
    term_np : callable
        Vectorised ``h`` on float arrays.
    decay : float
        Exponent ``q`` with ``h(j) ~ j**-q`` for large j; it must exceed
        ``-x`` for the series to converge.
    """
    if x <= -1:
        raise ValueError("alternating binomial sum requires x > -1")
    integer = _is_nonneg_int(x)
    head_end, dps = head_layout(x)
    with mpmath.workdps(dps):
        xm = mpmath.mpf(int(round(x))) if integer else mpmath.mpf(x)
        head = mpmath.mpf(0)
        for j in range(head_end + 1):
            head += (-1) ** j * mpmath.binomial(xm, j) * term_mp(j)
        head = float(head)
    if integer:
        return head
    p = x + 1.0 + decay
    if p <= 1.0:
        raise ConvergenceError(f"alternating binomial series (x={x}) diverges", n_terms=0)
    # (-1)**j C(x, j) = Gamma(j - x) / (Gamma(-x) j!) keeps one sign past x
    lg, sg = gammaln(-x), gammasgn(-x)
    base, levels = 512, 7
    j = np.arange(head_end + 1, base * 2 ** (levels - 1) + 1, dtype=float)
    t = sg * np.exp(gammaln(j - x) - gammaln(j + 1) - lg) * term_np(j)
    ends = [base * 2 ** k for k in range(levels)]
    table = [math.fsum(t[: e - head_end]) for e in ends]
    if not np.all(np.isfinite(t)):
        raise ConvergenceError(f"alternating binomial series (x={x}) overflowed")
    # S(J) = S - J**(1-p) (a0 + a1/J + ...): eliminate exponents 1-p, -p, ...
    est = table
    for m in range(levels - 1):
        r = 2.0 ** (1.0 - p - m)
        est = [(est[k + 1] - r * est[k]) / (1.0 - r) for k in range(len(est) - 1)]
    return head + est[-1]


def integrate_pieces(func, breaks, *, epsabs=0.0, epsrel=1e-12, limit=400,
                     check_tol=None):
    """Integrate ``func`` over consecutive intervals of ``breaks``.

    The last break may be ``inf``. Returns ``(value, abserr)``. If
    ``check_tol`` is given and the summed error estimate exceeds it
    (relative to the total), :class:`IntegrabilityError` is raised with the
    QUADPACK diagnostics of the offending pieces.
    """
    total = 0.0
    err = 0.0
    notes = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if not b > a:
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, e = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        if caught:
            notes.append(f"[{a:.3g}, {b:.3g}]: {str(caught[0].message).splitlines()[0]}")
        if not math.isfinite(val):
            raise IntegrabilityError(f"integral on [{a}, {b}] is not finite")
        total += val
        err += e
    # pieces are judged together: a negligible piece may miss its own
    # relative target without affecting the total
    if check_tol is not None and not err <= check_tol * max(abs(total), 1e-300):
        raise IntegrabilityError(
            f"quadrature error {err:.3g} exceeds tolerance for value {total:.6g}; " + "; ".join(notes)
        )
    return total, err
