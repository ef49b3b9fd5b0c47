"""Closed-form densities of the four named sub-models.

EWG (geometric), EWP (Poisson), EWL (logarithmic) and EWB (binomial) are
written out directly from their explicit formulas, without going through
:class:`~ewps.power_series.PowerSeriesFamily`. They exist as independent
cross-checks of the generic composition in :mod:`ewps.distribution`.
"""

from __future__ import annotations

import numpy as np

from .distribution import EwpsParams
from .ew import _positive

__all__ = ["submodel_pdf", "submodel_cdf", "submodel_hazard"]


def _pieces(p: EwpsParams, y):
    y = _positive(y)
    z = (p.beta * y) ** p.gamma
    d = -np.expm1(-z)
    g = d ** p.alpha
    # EW density without the alpha factor folded into the compounding terms
    g_pdf = p.alpha * p.gamma * p.beta ** p.gamma * y ** (p.gamma - 1) * np.exp(-z) * d ** (p.alpha - 1)
    return g, g_pdf


def submodel_cdf(p: EwpsParams, y):
    """cdf from the explicit sub-model formula for ``p.family``."""
    g, _ = _pieces(p, y)
    th = p.theta
    name = p.family.name
    if name == "geometric":
        out = (1 - th) * g / (1 - th * g)
    elif name == "poisson":
        out = np.expm1(th * g) / np.expm1(th)
    elif name == "logarithmic":
        out = np.log1p(-th * g) / np.log1p(-th)
    elif name == "binomial":
        m = p.family.m
        out = ((th * g + 1) ** m - 1) / ((th + 1) ** m - 1)
    else:
        raise ValueError(f"no closed-form sub-model for {name}")
    return out


def submodel_pdf(p: EwpsParams, y):
    """Density from the explicit sub-model formula for ``p.family``."""
    g, gp = _pieces(p, y)
    th = p.theta
    name = p.family.name
    if name == "geometric":
        out = (1 - th) * gp / (1 - th * g) ** 2
    elif name == "poisson":
        out = th * gp * np.exp(th * g) / np.expm1(th)
    elif name == "logarithmic":
        out = th * gp / ((th * g - 1) * np.log1p(-th))
    elif name == "binomial":
        m = p.family.m
        out = m * th * gp * (th * g + 1) ** (m - 1) / ((th + 1) ** m - 1)
    else:
        raise ValueError(f"no closed-form sub-model for {name}")
    return out


def submodel_hazard(p: EwpsParams, y):
    """Hazard from the explicit sub-model formula for ``p.family``."""
    g, gp = _pieces(p, y)
    th = p.theta
    name = p.family.name
    if name == "geometric":
        out = (1 - th) * gp / ((1 - th * g) * (1 - g))
    elif name == "poisson":
        out = th * gp * np.exp(th * g) / (np.exp(th) - np.exp(th * g))
    elif name == "logarithmic":
        out = th * gp / ((th * g - 1) * np.log((1 - th) / (1 - th * g)))
    elif name == "binomial":
        m = p.family.m
        out = m * th * gp * (th * g + 1) ** (m - 1) / ((th + 1) ** m - (th * g + 1) ** m)
    else:
        raise ValueError(f"no closed-form sub-model for {name}")
    return out
