"""
Moment formula for the smile wings
lim sup T sigma(T, k)^2 / |k| = phi(p* - 1) on the right and phi(q*) on the left,
with phi(x) = 2 - 4(sqrt(x^2 + x) - x).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from lsv.exceptions import DomainError, EstimationError
from lsv.services.curves import LogMagnitude

from .smile import SmilePoint

logger = logging.getLogger(__name__)

MIN_WING_POINTS = 3
ASYMPTOTIC_LOG_X = 40.0


def lee_phi(x: float) -> float:
    """2 / (sqrt(x + 1) + sqrt(x))^2, the cancellation-free form of 2 - 4(sqrt(x^2+x) - x)."""
    if math.isnan(x) or x < 0:
        raise DomainError(f"lee_phi needs x >= 0, got {x}")
    if math.isinf(x):
        return 0.0
    return 2.0 / (math.sqrt(x + 1.0) + math.sqrt(x)) ** 2


def lee_phi_log(log_x: float) -> float:
    """log phi(e^log_x); uses phi(x) ~ 1/(2x) once x is astronomically large."""
    if math.isnan(log_x):
        raise DomainError("lee_phi_log got NaN")
    if log_x == math.inf:
        return -math.inf
    if log_x > ASYMPTOTIC_LOG_X:
        return -math.log(2.0) - log_x
    return math.log(lee_phi(math.exp(log_x)))


@dataclass(frozen=True)
class WingFloors:
    """Log lower bounds on the right and left wing slopes implied by a moment ceiling."""

    log_right: float
    log_left: float

    @property
    def right(self) -> float:
        return math.exp(self.log_right)

    @property
    def left(self) -> float:
        return math.exp(self.log_left)

    def as_dict(self) -> Dict[str, Any]:
        return {"log_right": self.log_right, "log_left": self.log_left, "right": self.right, "left": self.left}


def wing_floors(ceiling: LogMagnitude) -> WingFloors:
    """phi(c - 1) and phi(c) for the critical-exponent ceiling c = c_T psi(rho_bar)."""
    log_c = ceiling.log_value
    if log_c > ASYMPTOTIC_LOG_X:
        # c - 1 and c agree to double precision
        log_right = lee_phi_log(log_c)
    else:
        c = math.exp(log_c)
        log_right = math.log(lee_phi(max(c - 1.0, 0.0)))
    return WingFloors(log_right=log_right, log_left=lee_phi_log(log_c))


@dataclass(frozen=True)
class WingFit:
    side: str
    slope: float
    intercept: float
    slope_stderr: float
    k_range: tuple
    points: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "side": self.side,
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "k_range": list(self.k_range),
            "points": self.points,
        }


@dataclass(frozen=True)
class WingSlopes:
    right: WingFit
    left: WingFit
    floors: Optional[WingFloors] = None
    notes: List[str] = field(default_factory=list)

    @property
    def exceeds_floors(self) -> bool:
        if self.floors is None:
            return True
        return self.right.slope >= self.floors.right and self.left.slope >= self.floors.left

    def as_dict(self) -> Dict[str, Any]:
        return {
            "right": self.right.as_dict(),
            "left": self.left.as_dict(),
            "floors": self.floors.as_dict() if self.floors else None,
            "exceeds_floors": self.exceeds_floors,
            "notes": list(self.notes),
        }


def _fit_wing(side: str, points: List[SmilePoint]) -> WingFit:
    if len(points) < MIN_WING_POINTS:
        raise EstimationError(f"{side} wing has {len(points)} usable points, needs {MIN_WING_POINTS}")
    abs_k = np.array([abs(p.k) for p in points])
    total_variance = np.array([p.T * p.implied_vol ** 2 for p in points])
    if np.ptp(abs_k) == 0:
        raise EstimationError(f"{side} wing points share a single |k|")
    result = stats.linregress(abs_k, total_variance)
    return WingFit(
        side=side,
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_stderr=float(result.stderr),
        k_range=(float(abs_k.min()), float(abs_k.max())),
        points=len(points),
    )


def wing_slopes(smile: Sequence[SmilePoint], k_min_abs: float, ceiling: Optional[LogMagnitude] = None) -> WingSlopes:
    """
    Least-squares slope of T sigma^2 against |k| on each wing, using the
    points with |k| >= k_min_abs. These are finite-k slopes; the lim sup in
    the moment formula is never claimed to be attained.
    """
    right = [p for p in smile if p.k >= k_min_abs]
    left = [p for p in smile if p.k <= -k_min_abs]
    fits = WingSlopes(
        right=_fit_wing("right", right),
        left=_fit_wing("left", left),
        floors=wing_floors(ceiling) if ceiling is not None else None,
        notes=["finite-k least-squares slopes of T*sigma^2 against |k|"],
    )
    logger.debug("Wing slopes right=%.6g left=%.6g", fits.right.slope, fits.left.slope)
    return fits


@dataclass(frozen=True)
class LeeComparison:
    """
    Finite-k wing slopes against phi(p* - 1) and phi(q*). A side more than
    ``band`` above its moment-formula value is reported as a known finite-k
    deviation; a side more than ``band`` below it fails ``consistent``.
    """

    right_slope: float
    left_slope: float
    lee_right: float
    lee_left: float
    band: float

    @staticmethod
    def _gap(slope: float, lee: float) -> float:
        if lee > 0:
            return (slope - lee) / lee
        return math.inf if slope > 0 else 0.0

    @property
    def right_gap(self) -> float:
        return self._gap(self.right_slope, self.lee_right)

    @property
    def left_gap(self) -> float:
        return self._gap(self.left_slope, self.lee_left)

    @property
    def right_within_band(self) -> bool:
        return abs(self.right_gap) <= self.band

    @property
    def left_within_band(self) -> bool:
        return abs(self.left_gap) <= self.band

    @property
    def within_band(self) -> bool:
        return self.right_within_band and self.left_within_band

    @property
    def consistent(self) -> bool:
        return self.right_gap >= -self.band and self.left_gap >= -self.band

    @property
    def known_deviations(self) -> List[str]:
        notes = []
        for side, gap in (("right", self.right_gap), ("left", self.left_gap)):
            if gap > self.band:
                notes.append(
                    f"{side} wing: finite-k slope sits {gap:+.1%} above the moment formula (slow convergence in |k|)"
                )
        return notes

    def as_dict(self) -> Dict[str, Any]:
        return {
            "right_slope": self.right_slope,
            "left_slope": self.left_slope,
            "lee_right": self.lee_right,
            "lee_left": self.lee_left,
            "band": self.band,
            "right_relative_difference": self.right_gap,
            "left_relative_difference": self.left_gap,
            "right_within_band": self.right_within_band,
            "left_within_band": self.left_within_band,
            "within_band": self.within_band,
            "consistent": self.consistent,
            "known_deviations": self.known_deviations,
        }


def compare_to_moment_formula(slopes: WingSlopes, p_star: float, q_star: float, band: float) -> LeeComparison:
    """Fitted wing slopes next to phi(p* - 1) on the right and phi(q*) on the left."""
    comparison = LeeComparison(
        right_slope=slopes.right.slope,
        left_slope=slopes.left.slope,
        lee_right=lee_phi(max(p_star - 1.0, 0.0)),
        lee_left=lee_phi(q_star),
        band=band,
    )
    for note in comparison.known_deviations:
        logger.info("Known deviation: %s", note)
    if not comparison.consistent:
        logger.warning(
            "Wing slopes below the moment formula: right %+.3f left %+.3f", comparison.right_gap, comparison.left_gap
        )
    return comparison
