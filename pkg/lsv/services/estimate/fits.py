"""
Slope fits
Least-squares fits of log-probabilities against y.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from lsv.exceptions import EstimationError

from .intervals import MCEstimate

logger = logging.getLogger(__name__)

DEFAULT_MIN_HITS = 30
MIN_POINTS = 3


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    points: List[Tuple[float, float]]
    excluded: List[Tuple[float, str]] = field(default_factory=list)

    @property
    def y_range(self) -> Tuple[float, float]:
        return self.points[0][0], self.points[-1][0]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
            "excluded": [list(p) for p in self.excluded],
        }


def _linear_fit(points: List[Tuple[float, float]], excluded) -> SlopeFit:
    ys = np.array([p[0] for p in points])
    logs = np.array([p[1] for p in points])
    result = stats.linregress(ys, logs)
    return SlopeFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_stderr=float(result.stderr),
        r_squared=float(result.rvalue ** 2),
        points=points,
        excluded=list(excluded),
    )


def fit_log_slope(ys: Sequence[float], probabilities: Sequence[float]) -> SlopeFit:
    """Fit log p against y for exact (oracle) tables; non-positive p are excluded."""
    points, excluded = [], []
    for y, p in sorted(zip(ys, probabilities)):
        if p > 0 and math.isfinite(p):
            points.append((float(y), math.log(p)))
        else:
            excluded.append((float(y), "non-positive probability"))
    if len(points) < MIN_POINTS:
        raise EstimationError(f"slope fit needs >= {MIN_POINTS} positive points, got {len(points)}")
    return _linear_fit(points, excluded)


def tail_slope(tails: Sequence[Tuple[float, MCEstimate]], min_hits: int = DEFAULT_MIN_HITS) -> SlopeFit:
    """
    Fit log p_hat against y over the range from the lowest to the highest y
    with at least ``min_hits`` hits. Every dropped point is listed with its reason.
    """
    ordered = sorted(tails, key=lambda item: item[0])
    qualifying = [y for y, est in ordered if est.hits >= min_hits and est.hits > 0]
    if len(qualifying) < MIN_POINTS:
        raise EstimationError(
            f"tail_slope needs >= {MIN_POINTS} points with >= {min_hits} hits, got {len(qualifying)}"
        )
    lo, hi = qualifying[0], qualifying[-1]

    points, excluded = [], []
    for y, est in ordered:
        if y < lo or y > hi:
            excluded.append((float(y), "outside fit range"))
        elif est.hits < min_hits or est.hits <= 0:
            excluded.append((float(y), f"fewer than {min_hits} hits"))
        else:
            points.append((float(y), math.log(est.p_hat)))
    if excluded:
        logger.debug("tail_slope excluded %d points: %s", len(excluded), excluded)
    return _linear_fit(points, excluded)
