from .density import kde_log_density
from .fits import SlopeFit, fit_log_slope, tail_slope
from .intervals import BRIDGE_CORRECTED, GRID_RESTRICTED, MCEstimate, clopper_pearson
from .moments import MomentEstimate, ScalingFit, exp_moment, increment_scaling
from .probabilities import small_ball, terminal_tail, tube_hits, tube_probability

__all__ = [
    "BRIDGE_CORRECTED",
    "GRID_RESTRICTED",
    "MCEstimate",
    "MomentEstimate",
    "ScalingFit",
    "SlopeFit",
    "clopper_pearson",
    "exp_moment",
    "fit_log_slope",
    "increment_scaling",
    "kde_log_density",
    "small_ball",
    "tail_slope",
    "terminal_tail",
    "tube_hits",
    "tube_probability",
]
