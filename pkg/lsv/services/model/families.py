"""
Builtin coefficient families
Closed registry of families the experiment config can instantiate. Each
constructor declares the coefficient bound metadata alongside the coefficients.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Dict, Optional

import numpy as np

from lsv.exceptions import ModelSpecError

from .specs import ModelSpec

logger = logging.getLogger(__name__)

# Smallest float strictly above 1 (K must exceed 1)
K_FLOOR = float(np.nextafter(1.0, 2.0))


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        try:
            ok = math.isfinite(float(value))
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ModelSpecError(f"{name} must be a finite number, got {value!r}")


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if value <= 0:
            raise ModelSpecError(f"{name} must be > 0, got {value}")


def heston_drift_K(kappa: float, theta: float) -> float:
    """
    Smallest K > 1 with |kappa (theta - v)| <= K (1 + v) for v >= 0.
    """
    return max(kappa * max(1.0, theta), K_FLOOR)


def _heston_vol_bounds(xi: float):
    lo = min(xi, 1.0) / 2.0
    hi = 2.0 * max(xi, 1.0)
    return lo, hi


def make_heston(
    kappa: float,
    theta: float,
    xi: float,
    rho: float,
    V0: float,
    T: float,
    *,
    K: Optional[float] = None,
) -> ModelSpec:
    """
    Heston as a member of the class: eta = 1, beta = kappa (theta - v), sigma = xi.

    Declared bounds: eta_lo = sigma_lo = min(xi, 1)/2, eta_hi = sigma_hi = 2 max(xi, 1).
    K defaults to the smallest valid constant for the affine drift.
    """
    _require_finite(kappa=kappa, theta=theta, xi=xi, rho=rho, V0=V0, T=T)
    _require_positive(kappa=kappa, theta=theta, xi=xi, V0=V0, T=T)

    kappa, theta, xi = float(kappa), float(theta), float(xi)

    def heston_eta(t, x):
        return np.ones_like(x)

    def heston_beta(t, v):
        return kappa * (theta - v)

    def heston_sigma(t, v):
        return np.full_like(v, xi)

    lo, hi = _heston_vol_bounds(xi)
    return ModelSpec(
        eta=heston_eta,
        beta=heston_beta,
        sigma=heston_sigma,
        rho=float(rho),
        V0=float(V0),
        T=float(T),
        K=float(K) if K is not None else heston_drift_K(kappa, theta),
        eta_lo=lo,
        eta_hi=hi,
        sigma_lo=lo,
        sigma_hi=hi,
        family="heston",
        params=(("kappa", kappa), ("theta", theta), ("xi", xi)),
    )


def make_bounded_skew_heston(
    kappa: float,
    theta: float,
    xi: float,
    rho: float,
    V0: float,
    T: float,
    eta0: float,
    epsilon: float,
    *,
    K: Optional[float] = None,
) -> ModelSpec:
    """
    Heston variance with a bounded local skew:

        eta(t, x) = clip(eta0 (1 + epsilon tanh x), eta_lo, eta_hi)

    with eta_lo = min(eta0 (1 - |epsilon|), 1)/2 and eta_hi = 2 max(eta0 (1 + |epsilon|), 1).
    tanh is 1-Lipschitz, so eta is (eta0 |epsilon|)-Lipschitz in x; K covers both
    that slope and the affine drift.
    """
    _require_finite(kappa=kappa, theta=theta, xi=xi, rho=rho, V0=V0, T=T, eta0=eta0, epsilon=epsilon)
    _require_positive(kappa=kappa, theta=theta, xi=xi, V0=V0, T=T, eta0=eta0)
    if not abs(epsilon) < 1.0:
        raise ModelSpecError(f"epsilon must satisfy |epsilon| < 1, got {epsilon}")

    kappa, theta, xi = float(kappa), float(theta), float(xi)
    eta0, epsilon = float(eta0), float(epsilon)

    eta_lo = min(eta0 * (1.0 - abs(epsilon)), 1.0) / 2.0
    eta_hi = 2.0 * max(eta0 * (1.0 + abs(epsilon)), 1.0)

    def skew_eta(t, x):
        return np.clip(eta0 * (1.0 + epsilon * np.tanh(x)), eta_lo, eta_hi)

    def heston_beta(t, v):
        return kappa * (theta - v)

    def heston_sigma(t, v):
        return np.full_like(v, xi)

    sigma_lo, sigma_hi = _heston_vol_bounds(xi)
    default_K = max(heston_drift_K(kappa, theta), eta0 * abs(epsilon))
    return ModelSpec(
        eta=skew_eta,
        beta=heston_beta,
        sigma=heston_sigma,
        rho=float(rho),
        V0=float(V0),
        T=float(T),
        K=float(K) if K is not None else default_K,
        eta_lo=eta_lo,
        eta_hi=eta_hi,
        sigma_lo=sigma_lo,
        sigma_hi=sigma_hi,
        family="bounded_skew_heston",
        params=(
            ("kappa", kappa), ("theta", theta), ("xi", xi),
            ("eta0", eta0), ("epsilon", epsilon),
        ),
    )


# Registry: family name -> (constructor, parameter names beyond rho/V0/T)
FAMILIES: Dict[str, Callable[..., ModelSpec]] = {
    "heston": make_heston,
    "bounded_skew_heston": make_bounded_skew_heston,
}

FAMILY_PARAMS: Dict[str, tuple] = {
    "heston": ("kappa", "theta", "xi", "rho", "V0", "T"),
    "bounded_skew_heston": ("kappa", "theta", "xi", "rho", "V0", "T", "eta0", "epsilon"),
}


def build_family(name: str, params: Dict[str, float], *, K: Optional[float] = None) -> ModelSpec:
    """
    Instantiate a registered family from a parameter mapping.
    """
    if name not in FAMILIES:
        raise ModelSpecError(f"Unknown model family '{name}'. Known: {sorted(FAMILIES)}")

    expected = FAMILY_PARAMS[name]
    missing = [p for p in expected if p not in params]
    unknown = [p for p in params if p not in expected]
    if missing or unknown:
        raise ModelSpecError(
            f"Family '{name}' expects parameters {list(expected)}; "
            f"missing={missing}, unknown={unknown}"
        )

    logger.debug("Building family %s with %s (K override=%s)", name, params, K)
    return FAMILIES[name](**{p: params[p] for p in expected}, K=K)
