from .solver import (
    DiscreteCurve,
    action,
    analytic_curve,
    closed_form_action,
    el_residual,
    extrapolated_minimizer,
    minimize_action,
    straight_line,
    to_u_residual,
)

__all__ = [
    "DiscreteCurve",
    "action",
    "analytic_curve",
    "closed_form_action",
    "el_residual",
    "extrapolated_minimizer",
    "minimize_action",
    "straight_line",
    "to_u_residual",
]
