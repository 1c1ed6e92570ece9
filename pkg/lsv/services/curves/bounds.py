"""
Tube, tail, small-ball and segment bounds
Each bound is returned as the LogMagnitude M of its exponent: the
probability is bounded below by exp(-M).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate

from lsv.exceptions import DomainError
from lsv.services.model import ModelSpec

from .constants import BoundConstants, bound_constants
from .curves import (
    SMALL_BALL_FLOOR,
    CurveTriple,
    curve_for_arrival,
    log_psi,
    require_above,
    y_threshold,
)
from .logdomain import LogMagnitude

logger = logging.getLogger(__name__)


def _constants(spec: ModelSpec, consts: Optional[BoundConstants], y: Optional[float] = None) -> BoundConstants:
    if consts is None or consts.c_T is None:
        return bound_constants(spec, y)
    return consts


# -----------------------------
# Rate function
# -----------------------------


def rate_integrand(v, v_prime, x_prime, r, *, c: float, lam: float, L_T: float, rho_bar: float, h: float):
    """
    F = 1/h + (x'^2 + v'^2)/(rho_bar^2 lam v) + 2 (c^2 v^2 + L_T v)(1/(rho_bar^2 lam v) + 1/r^2)
    """
    v = np.asarray(v, dtype=float)
    ell = rho_bar ** 2 * lam * v
    return (
        1.0 / h
        + (np.square(x_prime) + np.square(v_prime)) / ell
        + 2.0 * (c * c * v * v + L_T * v) * (1.0 / ell + 1.0 / np.square(r))
    )


def rate_function(curve: CurveTriple, consts: BoundConstants, rho_bar: float, t) -> np.ndarray:
    """Rate function at t (scalar or array) using the analytic curve derivatives."""
    p = curve.evaluate(t)
    return rate_integrand(
        p.v_tilde, p.v_prime, p.x_prime, p.r_tilde,
        c=consts.c, lam=consts.lam, L_T=consts.L_T, rho_bar=rho_bar, h=curve.h,
    )


def integrated_rate(curve: CurveTriple, consts: BoundConstants, rho_bar: float) -> float:
    """Trapezoid integral of the rate function over the curve grid."""
    values = rate_function(curve, consts, rho_bar, curve.grid)
    return float(integrate.trapezoid(values, curve.grid))


def integrated_rate_ceiling(curve: CurveTriple, consts: BoundConstants, spec: ModelSpec) -> float:
    """
    Closed-form ceiling c~_T Gamma_T |y| on the integrated rate, with

        c~_T = 2 (T / tanh(T/2) + 4 V0 (c1 + c2))
        c1   = int_0^T (sinh(t/2)/sinh(T/2) + 1)^2 dt
        c2   = 1/(4 sinh^2(T/2)) int_0^T cosh^2(t/2) dt
    """
    T, V0 = spec.T, spec.V0
    sinh_T = math.sinh(T / 2.0)
    c1, _ = integrate.quad(lambda t: (math.sinh(t / 2.0) / sinh_T + 1.0) ** 2, 0.0, T)
    c2_int, _ = integrate.quad(lambda t: math.cosh(t / 2.0) ** 2, 0.0, T)
    c2 = c2_int / (4.0 * sinh_T ** 2)
    c_tilde = 2.0 * (T / math.tanh(T / 2.0) + 4.0 * V0 * (c1 + c2))
    Gamma_T = math.exp(consts.log_Gamma_T) if consts.log_Gamma_T is not None else max(
        1.0, 2.0 * (consts.c ** 2 + consts.L_T) / (min(V0, 1.0) * spec.rho_bar ** 2 * consts.lam)
    )
    return c_tilde * Gamma_T * abs(curve.y)


# -----------------------------
# Tube bounds
# -----------------------------


def raw_tube_log_bound(curve: CurveTriple, spec: ModelSpec, consts: Optional[BoundConstants] = None) -> LogMagnitude:
    """
    M = Q(mu) (1 + int_0^T F dt), Q(mu) = (q/phi^2) ln(q/phi), phi = rho_bar^2 lam / gamma.
    """
    consts = _constants(spec, consts, curve.y)
    integral = integrated_rate(curve, consts, spec.rho_bar)
    return LogMagnitude.from_log(consts.log_Q + math.log1p(integral))


def theorem_log_bound(y: float, spec: ModelSpec, consts: Optional[BoundConstants] = None) -> LogMagnitude:
    """M = c_T psi(rho_bar) |y|, for |y| above the tube threshold."""
    require_above(y, y_threshold(spec)[0], "theorem_log_bound")
    consts = _constants(spec, consts, y)
    return consts.c_T.scaled(log_psi(spec.rho_bar) + math.log(abs(y)))


def cdf_tail_log_bound(y: float, spec: ModelSpec, consts: Optional[BoundConstants] = None) -> LogMagnitude:
    """
    M = c_T psi(rho_bar) y for both P(X_T > y) and P(X_T < -y).

    The underlying tube argument runs along the shifted curve with
    y_bar = 2|y| + V0 (see ``tail_curve``), so y must clear both thresholds.
    """
    if y <= 0:
        raise DomainError(f"cdf_tail_log_bound needs y > 0, got {y}")
    require_above(y, max(y_threshold(spec)), "cdf_tail_log_bound")
    consts = _constants(spec, consts, y)
    return consts.c_T.scaled(log_psi(spec.rho_bar) + math.log(y))


def tail_curve(y: float, spec: ModelSpec, steps: int = 1000) -> CurveTriple:
    """Shifted curve used by the tail argument: arrival 2|y| + V0 at T."""
    return curve_for_arrival(y, 2.0 * abs(y) + spec.V0, spec.V0, spec.T, steps)


def moment_ceiling(spec: ModelSpec, consts: Optional[BoundConstants] = None) -> LogMagnitude:
    """c_T psi(rho_bar): upper bound on both critical exponents p* and q*."""
    consts = _constants(spec, consts)
    return consts.c_T.scaled(log_psi(spec.rho_bar))


# -----------------------------
# Small balls
# -----------------------------


def small_ball_threshold(spec: ModelSpec) -> float:
    first, second = y_threshold(spec)
    return max(first, SMALL_BALL_FLOOR, second)


def small_ball_radius(y: float, j: int) -> float:
    """R^(j)(y) = sqrt(|y|)^(1 - j)."""
    return math.sqrt(abs(y)) ** (1 - j)


def small_ball_log_bound(
    y: float, j: int, spec: ModelSpec, consts: Optional[BoundConstants] = None
) -> Tuple[LogMagnitude, float]:
    """
    (M, radius) with M = (j + 1) d_T psi(rho_bar) |y| and radius (sqrt|y|)^(1 - j).
    """
    if j < 0 or int(j) != j:
        raise DomainError(f"j must be a non-negative integer, got {j}")
    require_above(y, small_ball_threshold(spec), "small_ball_log_bound")
    consts = _constants(spec, consts, y)
    magnitude = consts.d_T.scaled(math.log(j + 1) + log_psi(spec.rho_bar) + math.log(abs(y)))
    return magnitude, small_ball_radius(y, j)


@dataclass(frozen=True)
class SmallBallChain:
    """
    Markov chaining behind the small-ball bound: a tube slice up to t^j_j,
    then j transitions over shrinking steps delta_i = T / (2 |y|^i) that
    tighten the ball from R^(i-1) to R^(i).
    """

    y: float
    j: int
    T: float
    deltas: List[float]
    knots: List[float]
    segment_exponents: List[LogMagnitude]
    transition_exponent: LogMagnitude
    slice_exponent: LogMagnitude
    stated_bound: LogMagnitude

    @property
    def chain_total(self) -> LogMagnitude:
        """Slice plus j transitions at the stated per-step exponent."""
        acc = self.slice_exponent
        for _ in range(self.j):
            acc = acc + self.transition_exponent
        return acc

    @property
    def dominated_by_stated(self) -> bool:
        return self.chain_total <= self.stated_bound

    def as_dict(self) -> Dict[str, Any]:
        return {
            "y": self.y,
            "j": self.j,
            "T": self.T,
            "deltas": list(self.deltas),
            "knots": list(self.knots),
            "segment_exponents": [m.as_dict() for m in self.segment_exponents],
            "transition_exponent": self.transition_exponent.as_dict(),
            "slice_exponent": self.slice_exponent.as_dict(),
            "chain_total": self.chain_total.as_dict(),
            "stated_bound": self.stated_bound.as_dict(),
            "dominated_by_stated": self.dominated_by_stated,
        }


def small_ball_chain(y: float, j: int, spec: ModelSpec, consts: Optional[BoundConstants] = None) -> SmallBallChain:
    stated, _ = small_ball_log_bound(y, j, spec, consts)
    consts = _constants(spec, consts, y)
    T = spec.T
    ay = abs(y)
    log_psi_y = log_psi(spec.rho_bar) + math.log(ay)

    # delta_i for i = 1..j; t^j_k = T - sum_{h=1..k} delta_{j-h+1}
    deltas = [T / (2.0 * ay ** i) for i in range(1, j + 1)]
    knots = [T]
    for k in range(1, j + 1):
        knots.append(knots[-1] - deltas[j - k])

    segments = []
    for k in range(1, j + 1):
        i = j - k + 1
        s, t = knots[k - 1], knots[k]
        segments.append(
            segment_log_bound(
                y, small_ball_radius(y, i - 1), small_ball_radius(y, i), t, s, spec, consts,
                check_floor=False,
            )
        )

    # Stated step exponent 2 c_T psi (1/T + T) |y|; slice 2 c_T (1/T + 1) psi |y|
    transition = consts.c_T.scaled(math.log(2.0) + math.log(1.0 / T + T) + log_psi_y)
    slice_term = consts.c_T.scaled(math.log(2.0) + math.log(1.0 / T + 1.0) + log_psi_y)

    logger.debug("Small-ball chain y=%s j=%d knots=%s", y, j, knots)
    return SmallBallChain(
        y=float(y),
        j=int(j),
        T=T,
        deltas=deltas,
        knots=knots,
        segment_exponents=segments,
        transition_exponent=transition,
        slice_exponent=slice_term,
        stated_bound=stated,
    )


def segment_log_bound(
    y: float,
    R1: float,
    R2: float,
    t: float,
    s: float,
    spec: ModelSpec,
    consts: Optional[BoundConstants] = None,
    *,
    check_floor: bool = True,
) -> LogMagnitude:
    """
    M = c_T psi(rho_bar) (R1^2 / ((s - t)|y|) + y^2 (s - t) / R2^2)
    for 0 < R2 <= R1 <= sqrt|y| and 0 <= t < s <= T.
    """
    ay = abs(y)
    if check_floor and not ay > SMALL_BALL_FLOOR:
        raise DomainError(f"segment_log_bound needs |y| > {SMALL_BALL_FLOOR}, got {ay}")
    if not 0.0 < R2 <= R1 <= math.sqrt(ay) * (1.0 + 1e-12):
        raise DomainError(f"radii must satisfy 0 < R2 <= R1 <= sqrt|y|, got R1={R1}, R2={R2}")
    if not 0.0 <= t < s <= spec.T * (1.0 + 1e-12):
        raise DomainError(f"times must satisfy 0 <= t < s <= T, got t={t}, s={s}")
    consts = _constants(spec, consts)
    dt = s - t
    bracket = R1 * R1 / (dt * ay) + ay * ay * dt / (R2 * R2)
    return consts.c_T.scaled(log_psi(spec.rho_bar) + math.log(bracket))
