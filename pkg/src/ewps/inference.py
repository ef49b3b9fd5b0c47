"""Likelihood inference: log-likelihood, analytic score and observed
information, direct maximum likelihood, EM, and Wald intervals.

Three nested models share the machinery:

``ewps``
    ``(alpha, beta, gamma, theta)`` with a compounding family.
``ew``
    ``(alpha, beta, gamma)``, the exponentiated Weibull.
``weibull``
    ``(beta, gamma)`` with ``alpha = 1``.

All derivatives are written in terms of ``z = (beta y)**gamma``,
``q = 1 / expm1(z)`` (so ``d log(1 - e**-z) / dz = q``) and the ratios
``R1 = C''/C'``, ``R2 = C'''/C'`` evaluated at ``x = theta G(y)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from ._numerics import log1mexp
from .distribution import EwpsParams
from .errors import DomainError, FitError
from .ew import EwParams
from .power_series import PowerSeriesFamily

__all__ = [
    "Dataset",
    "ParamVector",
    "FitResult",
    "LatentExpectation",
    "log_likelihood",
    "score",
    "observed_information",
    "mle_fit",
    "em_expected_z",
    "em_fit",
    "confidence_intervals",
    "default_init",
    "MODELS",
]

MODELS = ("ewps", "ew", "weibull")
_NAMES = {"ewps": ("alpha", "beta", "gamma", "theta"), "ew": ("alpha", "beta", "gamma"),
          "weibull": ("beta", "gamma")}


@dataclass(frozen=True)
class Dataset:
    """Complete (uncensored) positive lifetimes; at least five are required."""

    values: np.ndarray
    sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 5:
            raise DomainError(f"a dataset needs at least 5 observations, got {v.size}")
        bad = np.nonzero(~(np.isfinite(v) & (v > 0)))[0]
        if bad.size:
            raise DomainError(f"observation {bad[0] + 1} is not a positive finite number: {v[bad[0]]!r}")
        v.setflags(write=False)
        s = np.sort(v)
        s.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sorted", s)

    @property
    def n(self) -> int:
        return self.values.size

    def summary(self) -> dict:
        return {"n": self.n, "min": float(self.sorted[0]), "max": float(self.sorted[-1]),
                "mean": float(self.values.mean())}


@dataclass(frozen=True)
class ParamVector:
    """``(alpha, beta, gamma, theta)``; theta is ``None`` outside the ewps model."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    theta: float | None = None

    def free(self, model: str) -> np.ndarray:
        """The free coordinates of ``model`` in canonical order."""
        full = {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "theta": self.theta}
        return np.array([full[k] for k in _NAMES[model]], dtype=float)

    @classmethod
    def from_free(cls, model: str, vec) -> "ParamVector":
        vals = dict(zip(_NAMES[model], map(float, vec)))
        return cls(alpha=vals.get("alpha", 1.0), beta=vals["beta"], gamma=vals["gamma"],
                   theta=vals.get("theta"))


@dataclass(frozen=True)
class LatentExpectation:
    """Posterior means ``E[N | Y = y_i]`` of the latent counts."""

    z: np.ndarray


@dataclass
class FitResult:
    """Outcome of a fit; ``cov`` is the inverse observed information."""

    model: str
    family: PowerSeriesFamily | None
    estimate: ParamVector
    neg2loglik: float
    std_errors: np.ndarray
    cov: np.ndarray | None
    iterations: int
    converged: bool
    score_norm: float
    method: str
    loglik_trace: list = field(default_factory=list)
    message: str = ""

    @property
    def names(self) -> tuple:
        return _NAMES[self.model]

    @property
    def k_params(self) -> int:
        return len(self.names)

    @property
    def values(self) -> np.ndarray:
        return self.estimate.free(self.model)

    def distribution(self):
        """The fitted law as :class:`EwpsParams` or :class:`EwParams`."""
        e = self.estimate
        if self.model == "ewps":
            return EwpsParams(e.alpha, e.beta, e.gamma, e.theta, self.family)
        return EwParams(e.alpha, e.beta, e.gamma)


# ------------------------------------------------------------------ core

def _as_array(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    y = np.atleast_1d(np.asarray(data, dtype=float))
    if y.size == 0 or np.any(~(np.isfinite(y) & (y > 0))):
        raise DomainError("lifetimes must be positive and finite")
    return y


def _resolve(params, family, model):
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}")
    if isinstance(params, EwpsParams):
        return params.alpha, params.beta, params.gamma, params.theta, params.family
    if isinstance(params, EwParams):
        return params.alpha, params.beta, params.gamma, None, None
    if isinstance(params, ParamVector):
        vec = params.free(model)
    else:
        vec = np.asarray(params, dtype=float)
    pv = ParamVector.from_free(model, vec)
    if model == "ewps":
        if family is None:
            raise DomainError("the ewps model needs a compounding family")
        return pv.alpha, pv.beta, pv.gamma, family.check_theta(pv.theta), family
    return pv.alpha, pv.beta, pv.gamma, None, None


def _core(y, alpha, beta, gamma, theta, family, order):
    """Log-likelihood and, for ``order >= 1``, score and Hessian in (a, b, g, t)."""
    for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{name} must be positive and finite, got {v!r}")
    n = y.size
    ly = np.log(y)
    lb = math.log(beta)
    big_l = lb + ly
    z = np.exp(gamma * big_l)
    log_d = log1mexp(z)
    ll = (n * (math.log(alpha) + math.log(gamma) + gamma * lb) + (gamma - 1.0) * ly.sum()
          - z.sum() + (alpha - 1.0) * log_d.sum())
    has_t = family is not None
    if has_t:
        x = theta * np.exp(alpha * log_d)
        c1 = np.asarray(family.c(x, 1))
        c_t = family.c(theta, 0)
        ll += n * math.log(theta) + np.log(c1).sum() - n * math.log(c_t)
    if order == 0:
        return ll
    with np.errstate(over="ignore"):
        q = 1.0 / np.expm1(z)
    if has_t:
        r1 = np.asarray(family.c(x, 2)) / c1
        u = x * r1
    else:
        u = 0.0
    w = -1.0 + (alpha - 1.0) * q + alpha * q * u
    zb = gamma * z / beta
    zg = z * big_l
    g = np.zeros(4)
    g[0] = n / alpha + log_d.sum() + (u * log_d).sum()
    g[1] = n * gamma / beta + (w * zb).sum()
    g[2] = n / gamma + big_l.sum() + (w * zg).sum()
    if has_t:
        c1_t = family.c(theta, 1)
        g[3] = n / theta + u.sum() / theta - n * c1_t / c_t
    if order == 1:
        return ll, g
    if has_t:
        r2 = np.asarray(family.c(x, 3)) / c1
        hp = r2 - r1 * r1
        tt = r1 + x * hp
    else:
        x = hp = tt = 0.0
    qz = -q * (1.0 + q)
    wz = (alpha - 1.0) * qz + alpha * (qz * u + alpha * tt * x * q * q)
    wa = q * (1.0 + u + alpha * tt * x * log_d)
    zbb = gamma * (gamma - 1.0) * z / beta ** 2
    zbg = z / beta * (1.0 + gamma * big_l)
    zgg = z * big_l ** 2
    h = np.zeros((4, 4))
    h[0, 0] = -n / alpha ** 2 + np.sum(log_d ** 2 * tt * x)
    h[1, 1] = -n * gamma / beta ** 2 + np.sum(wz * zb ** 2 + w * zbb)
    h[2, 2] = -n / gamma ** 2 + np.sum(wz * zg ** 2 + w * zgg)
    h[1, 2] = n / beta + np.sum(wz * zb * zg + w * zbg)
    h[0, 1] = np.sum(wa * zb)
    h[0, 2] = np.sum(wa * zg)
    if has_t:
        wt = alpha * q * tt * x / theta
        c2_t = family.c(theta, 2)
        h[3, 3] = (-n / theta ** 2 - n * (c2_t / c_t - (c1_t / c_t) ** 2)
                   + np.sum(x * x * hp) / theta ** 2)
        h[0, 3] = np.sum(log_d * tt * x) / theta
        h[1, 3] = np.sum(wt * zb)
        h[2, 3] = np.sum(wt * zg)
    h = np.triu(h) + np.triu(h, 1).T
    return ll, g, h


def _index(model):
    return {"ewps": [0, 1, 2, 3], "ew": [0, 1, 2], "weibull": [1, 2]}[model]


def _evaluate(y, vec, model, family, order):
    pv = ParamVector.from_free(model, vec)
    theta = pv.theta if model == "ewps" else None
    fam = family if model == "ewps" else None
    if fam is not None:
        fam.check_theta(theta)
    out = _core(y, pv.alpha, pv.beta, pv.gamma, theta, fam, order)
    if order == 0:
        return out
    idx = _index(model)
    if order == 1:
        return out[0], out[1][idx]
    return out[0], out[1][idx], out[2][np.ix_(idx, idx)]


def log_likelihood(data, params, family: PowerSeriesFamily | None = None, model: str = "ewps") -> float:
    """Total log-likelihood; equals the sum of log densities.

    ``params`` may be an :class:`EwpsParams`, :class:`EwParams`,
    :class:`ParamVector` or an array of the model's free coordinates.
    """
    y = _as_array(data)
    a, b, g, t, fam = _resolve(params, family, model)
    ll = _core(y, a, b, g, t, fam, 0)
    if not math.isfinite(ll):
        raise DomainError("log-likelihood is not finite at these parameters")
    return float(ll)


def score(data, params, family: PowerSeriesFamily | None = None, model: str = "ewps") -> np.ndarray:
    """Gradient of :func:`log_likelihood` in the model's free coordinates."""
    y = _as_array(data)
    a, b, g, t, fam = _resolve(params, family, model)
    if isinstance(params, EwpsParams):
        model = "ewps"
    elif isinstance(params, EwParams) and model == "ewps":
        model = "ew"
    return _core(y, a, b, g, t, fam, 1)[1][_index(model)]


def observed_information(data, params, family: PowerSeriesFamily | None = None,
                         model: str = "ewps") -> np.ndarray:
    """Negative Hessian of the log-likelihood, symmetric by construction.

    Warns (``RuntimeWarning``) when the matrix is numerically singular.
    """
    y = _as_array(data)
    a, b, g, t, fam = _resolve(params, family, model)
    if isinstance(params, EwpsParams):
        model = "ewps"
    elif isinstance(params, EwParams) and model == "ewps":
        model = "ew"
    idx = _index(model)
    info = -_core(y, a, b, g, t, fam, 2)[2][np.ix_(idx, idx)]
    if np.linalg.cond(info) > 1e14:
        warnings.warn("observed information is numerically singular", RuntimeWarning, stacklevel=2)
    return info


# ---------------------------------------------------------- transforms

def _transform(model, family):
    """Maps between the free parameters v and unconstrained phi.

    Returns ``(to_phi, to_v, dv, d2v)`` with derivatives of v wrt phi.
    """
    k = len(_NAMES[model])
    s = family.support_upper if (model == "ewps") else math.inf
    bounded = model == "ewps" and math.isfinite(s)

    def to_phi(v):
        phi = np.log(np.asarray(v, dtype=float))
        if bounded:
            phi[-1] = math.log(v[-1] / s) - math.log1p(-v[-1] / s)
        return phi

    def to_v(phi):
        # keep squares of every coordinate representable
        phi = np.clip(phi, -300.0, 300.0)
        v = np.exp(phi)
        if bounded:
            t = phi[-1]
            v[-1] = s / (1.0 + math.exp(-t)) if t >= 0 else s * math.exp(t) / (1.0 + math.exp(t))
        return v

    def dv(v):
        d1 = np.array(v, dtype=float)
        d2 = np.array(v, dtype=float)
        if bounded:
            t = v[-1] / s
            d1[-1] = v[-1] * (1.0 - t)
            d2[-1] = d1[-1] * (1.0 - 2.0 * t)
        return d1, d2

    assert k == len(_NAMES[model])
    return to_phi, to_v, dv


def default_init(data, model: str = "ewps", family: PowerSeriesFamily | None = None) -> ParamVector:
    """Weibull probability-plot regression for ``(beta, gamma)``, ``alpha = 1``.

    ``log(-log S_i) = gamma log y_i + gamma log beta`` with median-rank
    plotting positions ``F_i = (i - 0.3) / (n + 0.4)``. Theta is put at
    the middle of its range (0.5 for bounded families, 1 otherwise).
    """
    y = np.sort(_as_array(data))
    n = y.size
    f = (np.arange(1, n + 1) - 0.3) / (n + 0.4)
    lhs = np.log(-np.log1p(-f))
    ly = np.log(y)
    if np.ptp(ly) > 0:
        slope, intercept = np.polyfit(ly, lhs, 1)
    else:
        slope, intercept = 1.0, -ly[0]
    gamma = max(float(slope), 1e-3)
    beta = math.exp(float(intercept) / gamma)
    theta = None
    if model == "ewps":
        s = family.support_upper
        theta = 0.5 * s if math.isfinite(s) else 1.0
    return ParamVector(alpha=1.0, beta=beta, gamma=gamma, theta=theta)


def _starts(base: ParamVector, model, family, extra=()):
    """The base point, five deterministic perturbations and any extra seeds."""
    out = [base]
    if model == "weibull":
        mult = [(1, 0.7), (1, 1.4), (0.8, 1), (1.25, 1), (0.9, 0.85)]
        out += [ParamVector(1.0, base.beta * mb, base.gamma * mg) for mb, mg in mult]
    else:
        # alpha and gamma trade off strongly; perturb them jointly
        mult = [(3.0, 0.6), (0.4, 1.6), (10.0, 0.45), (0.7, 1.0), (1.8, 0.8)]
        for i, (ma, mg) in enumerate(mult):
            theta = base.theta
            if model == "ewps":
                s = family.support_upper
                grid = (0.1, 0.9, 0.3, 0.7, 0.5) if math.isfinite(s) else (0.2, 4.0, 0.5, 2.0, 1.0)
                theta = grid[i] * (s if math.isfinite(s) else 1.0)
            out.append(ParamVector(base.alpha * ma, base.beta, base.gamma * mg, theta))
    return out + list(extra)


def _optimize(y, start_vec, model, family, gtol=1e-10, maxiter=500):
    to_phi, to_v, dv = _transform(model, family)
    n = y.size

    def fun(phi):
        try:
            v = to_v(phi)
            val = _evaluate(y, v, model, family, 0)
        except (ArithmeticError, ValueError):
            return math.inf
        return -val / n if math.isfinite(val) else math.inf

    def jac(phi):
        v = to_v(phi)
        _, g = _evaluate(y, v, model, family, 1)
        d1, _ = dv(v)
        out = -(g * d1) / n
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite gradient")
        return out

    def hess(phi):
        v = to_v(phi)
        _, g, h = _evaluate(y, v, model, family, 2)
        d1, d2 = dv(v)
        out = -(d1[:, None] * h * d1[None, :] + np.diag(g * d2)) / n
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite Hessian")
        return out

    phi0 = to_phi(start_vec)
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            res = optimize.minimize(fun, phi0, jac=jac, method="BFGS",
                                    options={"gtol": 1e-7, "maxiter": maxiter})
        except (ArithmeticError, ValueError, np.linalg.LinAlgError):
            return to_v(phi0), math.inf, 0
        phi = res.x
        nit = res.nit
        try:
            res2 = optimize.minimize(fun, phi, jac=jac, hess=hess, method="trust-exact",
                                     options={"gtol": gtol, "maxiter": maxiter})
            if np.isfinite(res2.fun) and res2.fun <= res.fun + 1e-12:
                phi, nit = res2.x, nit + res2.nit
        except (np.linalg.LinAlgError, ValueError, ArithmeticError):
            pass
    v = to_v(phi)
    return v, fun(phi), nit


def _polish(y, v, model, family, iters=20):
    """Newton steps on the original scale until the score stops shrinking."""
    to_phi, to_v, dv = _transform(model, family)
    ll, g, h = _evaluate(y, v, model, family, 2)
    best = (np.max(np.abs(g)), v, ll)
    for _ in range(iters):
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            break
        cand = v + step
        try:
            ll_c, g_c, h_c = _evaluate(y, cand, model, family, 2)
        except DomainError:
            break
        if not (math.isfinite(ll_c) and ll_c >= ll - 1e-9 * abs(ll)):
            break
        v, ll, g, h = cand, ll_c, g_c, h_c
        norm = np.max(np.abs(g))
        if norm < best[0]:
            best = (norm, v, ll)
        if norm < 1e-10:
            break
    return best[1]


def _finish(y, v, model, family, method, iterations, trace=(), message=""):
    ll, g, h = _evaluate(y, v, model, family, 2)
    info = -h
    score_norm = float(np.max(np.abs(g)))
    cov = None
    se = np.full(len(v), np.nan)
    pd = False
    try:
        np.linalg.cholesky(info)
        pd = True
        cov = np.linalg.inv(info)
        cov = 0.5 * (cov + cov.T)
        se = np.sqrt(np.diag(cov))
    except np.linalg.LinAlgError:
        message = (message + "; " if message else "") + "observed information is not positive definite"
    converged = bool(score_norm < 1e-6 and pd)
    if not converged and not message:
        message = f"score sup-norm {score_norm:.3g} above 1e-6"
    return FitResult(model=model, family=family if model == "ewps" else None,
                     estimate=ParamVector.from_free(model, v), neg2loglik=float(-2.0 * ll),
                     std_errors=se, cov=cov, iterations=int(iterations), converged=converged,
                     score_norm=score_norm, method=method, loglik_trace=list(trace), message=message)


def mle_fit(data, family: PowerSeriesFamily | None = None, init: ParamVector | None = None, *,
            model: str = "ewps", multistart: bool = True) -> FitResult:
    """Maximize the log-likelihood directly.

    The optimizer works on log-transformed positive parameters (logit of
    ``theta / s`` for bounded families) with the analytic gradient and
    Hessian. Starts: the supplied or default initial point, five
    deterministic perturbations and, for the four-parameter model, the
    fitted EW parameters paired with several small theta values. The best
    likelihood wins and is polished by Newton steps on the original scale.

    Raises
    ------
    FitError
        If no start yields a finite likelihood.
    """
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}")
    if model == "ewps" and family is None:
        raise DomainError("the ewps model needs a compounding family")
    y = _as_array(data)
    if np.ptp(y) == 0:
        raise FitError("all observations are equal; the likelihood is unbounded in gamma",
                       last_iterate=init, score=None)
    if init is not None:
        try:
            _evaluate(y, init.free(model), model, family, 0)
        except (DomainError, TypeError) as exc:
            raise DomainError(f"initial point is outside the parameter space: {exc}") from None
    base = init if init is not None else default_init(y, model, family)
    extra = []
    if model == "ewps" and multistart:
        ew = mle_fit(y, model="ew", multistart=True)
        if ew.cov is not None or np.isfinite(ew.neg2loglik):
            s = family.support_upper
            for t in (0.05, 0.3, 0.6, 0.9):
                extra.append(ParamVector(ew.estimate.alpha, ew.estimate.beta, ew.estimate.gamma,
                                         t * s if math.isfinite(s) else 10 * t))
    if model == "ew" and multistart:
        wb = mle_fit(y, model="weibull", multistart=True)
        extra.append(ParamVector(1.0, wb.estimate.beta, wb.estimate.gamma))
    starts = _starts(base, model, family, extra) if multistart else [base]
    best = None
    total_it = 0
    last_err = None
    for st in starts:
        try:
            v, f, nit = _optimize(y, st.free(model), model, family)
        except (DomainError, FloatingPointError, ValueError) as exc:
            last_err = exc
            continue
        total_it += nit
        if math.isfinite(f) and (best is None or f < best[1]):
            best = (v, f)
    if best is None:
        detail = f" ({last_err})" if last_err is not None else ""
        raise FitError("no start produced a finite likelihood" + detail, last_iterate=base, score=None)
    try:
        v = _polish(y, best[0], model, family)
        return _finish(y, v, model, family, "direct", total_it)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"derivatives are not computable at the best iterate: {exc}",
                       last_iterate=ParamVector.from_free(model, best[0]), score=None) from None


# -------------------------------------------------------------------- EM

def em_expected_z(data, params, family: PowerSeriesFamily) -> LatentExpectation:
    """``E[N | Y = y] = 1 + x C''(x) / C'(x)`` with ``x = theta G(y)``."""
    y = _as_array(data)
    a, b, g, t, fam = _resolve(params, family, "ewps")
    x = t * np.exp(a * log1mexp((b * y) ** g))
    z = 1.0 + x * np.asarray(fam.c(x, 2)) / np.asarray(fam.c(x, 1))
    return LatentExpectation(np.maximum(z, 1.0))


def _theta_step(family: PowerSeriesFamily, zbar: float) -> float:
    """Solve ``theta C'(theta) / C(theta) = zbar``; the left side increases from 1."""
    s = family.support_upper

    def f(t):
        return t * family.c(t, 1) / family.c(t, 0) - zbar

    lo = 1e-10 * (s if math.isfinite(s) else 1.0)
    if f(lo) >= 0:
        return lo
    if math.isfinite(s):
        hi = s * (1.0 - 1e-12)
        if f(hi) <= 0:
            return hi
    else:
        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e6:
                return hi
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _q_terms(y, ly, zs, v):
    """Expected complete-data log-likelihood in ``(alpha, beta, gamma)``.

    Returns value, gradient and Hessian in the log coordinates.
    """
    alpha, beta, gamma = v
    n = y.size
    big_l = math.log(beta) + ly
    z = np.exp(gamma * big_l)
    log_d = log1mexp(z)
    if not np.all(np.isfinite(log_d)):
        return -math.inf, None, None
    az = alpha * zs - 1.0
    val = (n * (math.log(alpha) + math.log(gamma) + gamma * math.log(beta))
           + (gamma - 1.0) * ly.sum() - z.sum() + np.sum(az * log_d))
    with np.errstate(over="ignore"):
        q = 1.0 / np.expm1(z)
    w = -1.0 + az * q
    wz = -az * q * (1.0 + q)
    zb = gamma * z / beta
    zg = z * big_l
    g = np.array([n / alpha + np.sum(zs * log_d),
                  n * gamma / beta + np.sum(w * zb),
                  n / gamma + big_l.sum() + np.sum(w * zg)])
    h = np.empty((3, 3))
    h[0, 0] = -n / alpha ** 2
    h[0, 1] = h[1, 0] = np.sum(zs * q * zb)
    h[0, 2] = h[2, 0] = np.sum(zs * q * zg)
    h[1, 1] = -n * gamma / beta ** 2 + np.sum(wz * zb ** 2 + w * gamma * (gamma - 1.0) * z / beta ** 2)
    h[1, 2] = h[2, 1] = n / beta + np.sum(wz * zb * zg + w * z / beta * (1.0 + gamma * big_l))
    h[2, 2] = -n / gamma ** 2 + np.sum(wz * zg ** 2 + w * zg * big_l)
    vv = np.asarray(v)
    return val, g * vv, vv[:, None] * h * vv[None, :] + np.diag(g * vv)


def _m_step_abg(y, ly, zs, v, max_iter=100):
    """Damped Newton ascent of the complete-data objective from ``v``."""
    phi = np.log(v)
    val, g, h = _q_terms(y, ly, zs, v)
    if not (math.isfinite(val) and np.all(np.isfinite(h))):
        raise DomainError("complete-data objective is not finite")
    for _ in range(max_iter):
        if np.max(np.abs(g)) < 1e-11 * y.size:
            break
        lam, vec = np.linalg.eigh(-h)
        lam = np.maximum(np.abs(lam), 1e-8 * max(1.0, np.max(np.abs(lam))))
        step = vec @ ((vec.T @ g) / lam)
        t = 1.0
        while t > 1e-10:
            cand = phi + t * step
            c_val, c_g, c_h = _q_terms(y, ly, zs, np.exp(cand))
            if math.isfinite(c_val) and c_val >= val and np.all(np.isfinite(c_h)):
                break
            t *= 0.5
        else:
            break
        if c_val == val and t < 1.0:
            break
        phi, val, g, h = cand, c_val, c_g, c_h
    return np.exp(phi)


def _em_map(y, ly, v, family):
    """One EM update ``v -> M(v)``; the objective never decreases."""
    zs = em_expected_z(y, ParamVector(*v), family).z
    theta = _theta_step(family, float(zs.mean()))
    abg = _m_step_abg(y, ly, zs, np.asarray(v[:3], dtype=float))
    return np.array([*abg, theta])


def em_fit(data, family: PowerSeriesFamily, init: ParamVector | None = None,
           max_iter: int = 500, tol: float = 1e-8, accelerate: bool = True) -> FitResult:
    """EM iterations treating the counts N_i as missing.

    E-step: ``z_i = E[N | y_i]``. M-step: ``theta`` solves
    ``theta C'(theta)/C(theta) = mean(z)``; ``(alpha, beta, gamma)`` maximize
    the complete-data objective by damped Newton ascent, which at its
    stationary point satisfies ``alpha = -n / sum z_i log D_i`` together with
    the two score equations for ``(beta, gamma)``. Each Newton step is kept
    only if that objective does not decrease, so the observed
    log-likelihood never decreases.

    Plain EM crawls along the weakly identified theta direction. With
    ``accelerate`` each iteration is a squared extrapolation (SQUAREM)
    of two EM updates in the transformed coordinates, followed by one EM
    update; it is accepted only if the observed log-likelihood does not
    fall below that of the two plain updates' start, otherwise the plain
    updates are kept. Stops when the largest relative parameter change is
    below ``tol``.

    Raises
    ------
    FitError
        If an iterate leaves the parameter space; carries the trace.
    """
    y = _as_array(data)
    ly = np.log(y)
    pv = init if init is not None else default_init(y, "ewps", family)
    v = pv.free("ewps")
    try:
        ll = _evaluate(y, v, "ewps", family, 0)
    except DomainError as exc:
        raise DomainError(f"initial point is outside the parameter space: {exc}") from None
    to_phi, to_v, _ = _transform("ewps", family)

    def loglik(w):
        try:
            val = _evaluate(y, w, "ewps", family, 0)
        except DomainError:
            return -math.inf
        return val if math.isfinite(val) else -math.inf

    trace = [float(ll)]
    it = 0
    for it in range(1, max_iter + 1):
        try:
            v1 = _em_map(y, ly, v, family)
            new = v1
            if accelerate:
                v2 = _em_map(y, ly, v1, family)
                new = v2
                p0, p1, p2 = to_phi(v), to_phi(v1), to_phi(v2)
                r, s = p1 - p0, p2 - 2.0 * p1 + p0
                if np.linalg.norm(s) > 0:
                    step = min(-np.linalg.norm(r) / np.linalg.norm(s), -1.0)
                    try:
                        with np.errstate(all="ignore"):
                            cand = _em_map(y, ly, to_v(p0 - 2.0 * step * r + step * step * s), family)
                    except (DomainError, ValueError, np.linalg.LinAlgError):
                        cand = None  # extrapolated too far; keep the plain updates
                    if cand is not None and np.all(np.isfinite(cand)) and loglik(cand) >= loglik(v2):
                        new = cand
        except (DomainError, ValueError) as exc:
            raise FitError(f"EM iterate left the parameter space: {exc}",
                           last_iterate=ParamVector(*v), trace=trace) from None
        ll_new = loglik(new)
        if not math.isfinite(ll_new):
            raise FitError("EM produced a non-finite likelihood", last_iterate=ParamVector(*v), trace=trace)
        change = float(np.max(np.abs(new - v) / np.abs(v)))
        v = new
        trace.append(float(ll_new))
        if change < tol:
            break
    res = _finish(y, v, "ewps", family, "em", it, trace)
    # EM is judged by its own stopping rule, not by the score
    res.converged = bool(change < tol and res.cov is not None)
    if res.converged:
        res.message = ""
    elif it == max_iter:
        res.message = "EM stopped at max_iter"
    return res


def confidence_intervals(fr: FitResult, level: float = 0.95) -> np.ndarray:
    """Wald intervals ``estimate +/- z_{(1+level)/2} * std_error``, one row per parameter."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if fr.cov is None or not fr.converged:
        raise FitError("confidence intervals need a converged fit with a covariance matrix",
                       last_iterate=fr.estimate, score=fr.score_norm)
    zq = stats.norm.ppf(0.5 + level / 2.0)
    est = fr.values
    return np.column_stack([est - zq * fr.std_errors, est + zq * fr.std_errors])
