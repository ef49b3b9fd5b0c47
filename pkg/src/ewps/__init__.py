"""Exponentiated Weibull power-series (EWPS) lifetime distributions.

Distribution functions, moments and reliability functionals, likelihood
fitting by direct maximization or EM, and goodness-of-fit statistics.
"""

from .errors import (
    ConvergenceError,
    DomainError,
    EwpsError,
    FitError,
    IntegrabilityError,
    SurvivalUnderflowError,
)
from .power_series import (
    Binomial,
    Geometric,
    Logarithmic,
    Poisson,
    Polynomial,
    PowerSeriesFamily,
    eval_c,
    get_family,
    inverse_c,
    power_coeffs,
    ps_pmf,
)
from .ew import EwParams, ew_cdf, ew_hazard, ew_moment, ew_pdf, ew_quantile, ew_sample
from .distribution import (
    EwpsParams,
    ewps_cdf,
    ewps_cdf_min,
    ewps_logpdf,
    ewps_mean_var,
    ewps_mgf,
    ewps_moment,
    ewps_pdf,
    ewps_quantile,
    ewps_sample,
    ewps_survival,
    ewps_survival_hazard,
    mixture_pdf,
)

from .inference import (
    Dataset,
    FitResult,
    ParamVector,
    confidence_intervals,
    em_expected_z,
    em_fit,
    log_likelihood,
    mle_fit,
    observed_information,
    score,
)
from .gof import GofReport, ad_cm, aic, empirical_survival, empirical_ttt, gof_report, ks_test

__version__ = "0.1.0"
