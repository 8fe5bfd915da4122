"""Empirical distribution functions: exponential bounds, moderate deviations,
the Gaussian limit and rare-event estimation."""

from .cdf_model import ContinuousCDF, parse_dist
from .empirical_process import SortedSample, decompose, draw_sample, psi, psi_inverse, sup_deviation
from .errors import DomainError, EmpLDPError, FlatRegionError, SingularityError
from .exp_gap import counting_exponential, gap_check, tilde_exponential
from .kolmogorov_bound import bound, delta_epsilon, lambda_star
from .limit_process import (
    covariance_check,
    fclt_diagnostic,
    limit_via_psi,
    limit_via_sde,
    simulate_gaussian_martingale,
)
from .paths import GridPath, uniform_grid
from .rare_event_mc import (
    MCEstimate,
    TiltSpec,
    crude_mc,
    exact_tail,
    importance_mc,
    ldp_scan,
    pointwise_scan,
)
from .rate_functions import (
    HittingSpec,
    hitting_minimum,
    optimal_path,
    pointwise_rate,
    rate_I,
    rate_J,
    variational_minimum,
)

__version__ = "0.1.0"
