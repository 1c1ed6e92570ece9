"""
Optimal curves, the constant chain and the log-domain bounds built on them.
"""
from .bounds import (
    SmallBallChain,
    cdf_tail_log_bound,
    integrated_rate,
    integrated_rate_ceiling,
    moment_ceiling,
    rate_function,
    rate_integrand,
    raw_tube_log_bound,
    segment_log_bound,
    small_ball_chain,
    small_ball_log_bound,
    small_ball_radius,
    small_ball_threshold,
    tail_curve,
    theorem_log_bound,
)
from .constants import (
    LOG_Q_MU,
    BoundConstants,
    DensityConstants,
    EllipticityReport,
    bound_constants,
    brownian_sup_probability,
    density_constants,
    ellipticity_report,
    epsilon_delta_q,
    log_m_T,
    tech_constants,
)
from .curves import (
    CurveTriple,
    class_membership_violations,
    curve_for_arrival,
    log_psi,
    optimal_curves,
    psi,
    regularity_window,
    y_threshold,
)
from .logdomain import LogMagnitude, total

__all__ = [
    "LOG_Q_MU",
    "BoundConstants",
    "CurveTriple",
    "DensityConstants",
    "EllipticityReport",
    "LogMagnitude",
    "SmallBallChain",
    "bound_constants",
    "brownian_sup_probability",
    "cdf_tail_log_bound",
    "class_membership_violations",
    "curve_for_arrival",
    "density_constants",
    "ellipticity_report",
    "epsilon_delta_q",
    "integrated_rate",
    "integrated_rate_ceiling",
    "log_m_T",
    "log_psi",
    "moment_ceiling",
    "optimal_curves",
    "psi",
    "rate_function",
    "rate_integrand",
    "raw_tube_log_bound",
    "regularity_window",
    "segment_log_bound",
    "small_ball_chain",
    "small_ball_log_bound",
    "small_ball_radius",
    "small_ball_threshold",
    "tail_curve",
    "tech_constants",
    "theorem_log_bound",
    "total",
    "y_threshold",
]
