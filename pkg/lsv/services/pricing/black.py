"""
Black formula on the forward
Undiscounted prices with F0 the forward and K = F0 e^k. Out-of-the-money
prices are evaluated in log space through log_ndtr so that deep wings keep
their relative accuracy instead of underflowing to zero.
"""
from __future__ import annotations

import logging
import math

from scipy import special, stats

from lsv.exceptions import ArbitrageError, DomainError

logger = logging.getLogger(__name__)

BISECTION_TOLERANCE = 1e-10
SIGMA_FLOOR = 1e-12
SIGMA_CEILING = 1e3


def _check(F0: float, T: float, sigma: float) -> None:
    if not F0 > 0:
        raise DomainError(f"F0 must be > 0, got {F0}")
    if not T > 0:
        raise DomainError(f"T must be > 0, got {T}")
    if sigma < 0 or math.isnan(sigma):
        raise DomainError(f"sigma must be >= 0, got {sigma}")


def _d(k: float, T: float, sigma: float):
    s = sigma * math.sqrt(T)
    d1 = (-k + 0.5 * s * s) / s
    return d1, d1 - s


def _log1mexp(a: float) -> float:
    """log(1 - e^a) for a <= 0."""
    if a >= 0.0:
        return -math.inf
    return math.log(-math.expm1(a)) if a > -math.log(2.0) else math.log1p(-math.exp(a))


def bs_log_otm(F0: float, k: float, T: float, sigma: float) -> float:
    """
    log of the out-of-the-money price: call for k >= 0, put for k < 0.
    -inf at sigma = 0.
    """
    _check(F0, T, sigma)
    if sigma == 0.0:
        return -math.inf
    if math.isinf(sigma):
        return math.log(F0) + min(k, 0.0)
    d1, d2 = _d(k, T, sigma)
    if k >= 0.0:
        lead = float(special.log_ndtr(d1))
        return math.log(F0) + lead + _log1mexp(k + float(special.log_ndtr(d2)) - lead)
    lead = k + float(special.log_ndtr(-d2))
    return math.log(F0) + lead + _log1mexp(float(special.log_ndtr(-d1)) - lead)


def bs_otm(F0: float, k: float, T: float, sigma: float) -> float:
    return math.exp(bs_log_otm(F0, k, T, sigma))


def intrinsic(F0: float, k: float) -> float:
    return max(F0 * -math.expm1(k), 0.0)


def bs_call(F0: float, k: float, T: float, sigma: float) -> float:
    """F0 (Phi(d1) - e^k Phi(d2)); intrinsic at sigma = 0 and F0 as sigma -> inf."""
    otm = bs_otm(F0, k, T, sigma)
    return otm if k >= 0.0 else otm + intrinsic(F0, k)


def bs_put(F0: float, k: float, T: float, sigma: float) -> float:
    otm = bs_otm(F0, k, T, sigma)
    return otm if k < 0.0 else otm + max(F0 * math.expm1(k), 0.0)


def bs_log_vega(F0: float, k: float, T: float, sigma: float) -> float:
    _check(F0, T, sigma)
    if sigma == 0.0 or math.isinf(sigma):
        return -math.inf
    d1, _ = _d(k, T, sigma)
    return math.log(F0) + float(stats.norm.logpdf(d1)) + 0.5 * math.log(T)


def bs_vega(F0: float, k: float, T: float, sigma: float) -> float:
    """d price / d sigma (same for calls and puts)."""
    return math.exp(bs_log_vega(F0, k, T, sigma))


def implied_vol_from_log_otm(log_otm: float, F0: float, k: float, T: float) -> float:
    """
    Invert bs_log_otm in sigma: bisection on log sigma down to a relative
    width of 1e-10, then one Newton step on the log price.
    """
    _check(F0, T, 0.0)
    ceiling = math.log(F0) + min(k, 0.0)
    if log_otm >= ceiling:
        raise ArbitrageError(f"out-of-the-money price exp({log_otm:.6g}) reaches its upper bound at k={k}")
    if log_otm == -math.inf:
        return 0.0

    lo, hi = math.log(SIGMA_FLOOR), math.log(1.0)
    while bs_log_otm(F0, k, T, math.exp(hi)) < log_otm:
        lo, hi = hi, hi + math.log(4.0)
        if hi > math.log(SIGMA_CEILING):
            raise ArbitrageError(f"no implied volatility below {SIGMA_CEILING} at k={k}")
    if bs_log_otm(F0, k, T, math.exp(lo)) >= log_otm:
        return SIGMA_FLOOR

    while hi - lo > BISECTION_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if bs_log_otm(F0, k, T, math.exp(mid)) < log_otm:
            lo = mid
        else:
            hi = mid
    sigma = math.exp(0.5 * (lo + hi))

    slope = math.exp(bs_log_vega(F0, k, T, sigma) - bs_log_otm(F0, k, T, sigma))
    if slope > 0.0 and math.isfinite(slope):
        polished = sigma - (bs_log_otm(F0, k, T, sigma) - log_otm) / slope
        if math.exp(lo) <= polished <= math.exp(hi):
            sigma = polished
    return sigma


def implied_vol_otm(otm_price: float, F0: float, k: float, T: float) -> float:
    if otm_price < 0:
        raise ArbitrageError(f"negative out-of-the-money price {otm_price} at k={k}")
    if otm_price == 0:
        return 0.0
    return implied_vol_from_log_otm(math.log(otm_price), F0, k, T)


def implied_vol(price: float, F0: float, k: float, T: float) -> float:
    """
    The unique sigma >= 0 with bs_call(F0, k, T, sigma) = price. Prices outside
    [intrinsic, F0) raise ArbitrageError.
    """
    _check(F0, T, 0.0)
    if price >= F0:
        raise ArbitrageError(f"call price {price} is not below the forward {F0}")
    floor = intrinsic(F0, k)
    if price < floor:
        raise ArbitrageError(f"call price {price} is below intrinsic value {floor} at k={k}")
    return implied_vol_otm(price - floor, F0, k, T)
