from .black import (
    bs_call,
    bs_log_otm,
    bs_log_vega,
    bs_otm,
    bs_put,
    bs_vega,
    implied_vol,
    implied_vol_from_log_otm,
    implied_vol_otm,
    intrinsic,
)
from .lee import (
    LeeComparison,
    WingFit,
    WingFloors,
    WingSlopes,
    compare_to_moment_formula,
    lee_phi,
    lee_phi_log,
    wing_floors,
    wing_slopes,
)
from .smile import (
    ABOVE_FORWARD,
    BELOW_INTRINSIC,
    SOURCE_MC,
    SOURCE_ORACLE,
    ZERO_PRICE,
    SmilePoint,
    SmileResult,
    smile_from_mc,
)

__all__ = [
    "ABOVE_FORWARD",
    "BELOW_INTRINSIC",
    "LeeComparison",
    "SOURCE_MC",
    "SOURCE_ORACLE",
    "SmilePoint",
    "SmileResult",
    "WingFit",
    "WingFloors",
    "WingSlopes",
    "ZERO_PRICE",
    "bs_call",
    "bs_log_otm",
    "bs_log_vega",
    "bs_otm",
    "bs_put",
    "bs_vega",
    "compare_to_moment_formula",
    "implied_vol",
    "implied_vol_from_log_otm",
    "implied_vol_otm",
    "intrinsic",
    "lee_phi",
    "lee_phi_log",
    "wing_floors",
    "wing_slopes",
]
