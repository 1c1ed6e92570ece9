from .inversion import DensityPoint, call_price, density, left_tail, mean, otm_price, tail
from .smile import oracle_smile
from .transforms import (
    CriticalMoments,
    HestonParams,
    char_fn,
    critical_moment,
    explosion_time,
    log_moment,
    moment,
)

__all__ = [
    "CriticalMoments",
    "DensityPoint",
    "HestonParams",
    "call_price",
    "char_fn",
    "critical_moment",
    "density",
    "explosion_time",
    "left_tail",
    "log_moment",
    "mean",
    "moment",
    "oracle_smile",
    "otm_price",
    "tail",
]
