"""Distributionally robust optimization with weighted empirical distributions under drift."""

from .concentration import (
    BoundParams,
    DriftSequenceSpec,
    PreconditionError,
    confidence_radius,
    drift_tail_bound,
    intersection_radii,
    monte_carlo_tail,
    stationary_tail_bound,
)
from .dro import (
    AmbiguitySpec,
    PiecewiseAffineLoss,
    newsvendor_order,
    worst_case_dual,
    worst_case_grid_lp,
    worst_case_intersection,
)
from .empirical import (
    DiscreteDistribution1D,
    UniformLaw,
    make_weighted_empirical,
    wasserstein_inf,
    wasserstein_p,
    wasserstein_p_point,
    wasserstein_p_uniform,
)
from .lp import Infeasible, LPError, Unbounded
from .sim import (
    DemandModel,
    SweepConfig,
    SweepResult,
    expected_newsvendor_cost_binomial,
    expost_sweep,
    lin_range,
    log_range,
    simulate_theta_path,
)
from .weights import (
    TradeoffInstance,
    concentration_objective,
    effective_sample_size,
    optimal_smoothing_rate,
    optimal_weights,
    optimal_weights_p1,
    optimal_window_size,
    smoothing_weights,
    weighted_drift,
    window_weights,
)

__version__ = "0.1.0"
