"""
Implied-volatility smiles
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lsv.exceptions import ArbitrageError, EstimationError
from lsv.services.simulate import PathBatch

from .black import bs_vega, implied_vol, intrinsic

logger = logging.getLogger(__name__)

SOURCE_MC = "mc"
SOURCE_ORACLE = "oracle"
SOURCES = (SOURCE_MC, SOURCE_ORACLE)

ZERO_PRICE = "zero MC price"
BELOW_INTRINSIC = "below intrinsic"
ABOVE_FORWARD = "above forward"

INTRINSIC_SLACK = 1e-12


@dataclass(frozen=True)
class SmilePoint:
    k: float
    T: float
    implied_vol: float
    source: str
    std_error: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.implied_vol) and self.implied_vol >= 0):
            raise ArbitrageError(f"implied vol must be finite and >= 0, got {self.implied_vol} at k={self.k}")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")

    def as_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "T": self.T, "implied_vol": self.implied_vol, "source": self.source,
                "std_error": self.std_error}


@dataclass(frozen=True)
class SmileResult:
    points: List[SmilePoint]
    dropped: List[Tuple[float, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "points": [p.as_dict() for p in self.points],
            "dropped": [{"k": k, "reason": reason} for k, reason in self.dropped],
        }


def smile_from_mc(batch: PathBatch, strikes: Sequence[float]) -> SmileResult:
    """
    Implied vols of the Monte Carlo call prices mean((e^{X_T} - e^k)^+) with
    F0 = 1. Prices outside the no-arbitrage band are dropped with a reason;
    standard errors are the price standard errors divided by vega.
    """
    x = batch.x_terminal
    n = x.size
    if n == 0:
        raise EstimationError("smile_from_mc needs a non-empty batch")
    T = batch.t_end - batch.t_start
    forward = np.exp(x)

    points, dropped = [], []
    for k in strikes:
        k = float(k)
        payoff = np.maximum(forward - math.exp(k), 0.0)
        price = float(np.mean(payoff))
        floor = intrinsic(1.0, k)
        if price <= 0.0:
            dropped.append((k, ZERO_PRICE))
            continue
        if price >= 1.0:
            dropped.append((k, ABOVE_FORWARD))
            continue
        if price < floor:
            if floor - price > INTRINSIC_SLACK:
                dropped.append((k, BELOW_INTRINSIC))
                continue
            price = floor
        sigma = implied_vol(price, 1.0, k, T)
        price_se = float(np.std(payoff, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
        if price_se == 0.0:
            std_error = 0.0
        else:
            vega = bs_vega(1.0, k, T, sigma)
            std_error = price_se / vega if vega > 0 else math.inf
        points.append(SmilePoint(k=k, T=T, implied_vol=sigma, source=SOURCE_MC, std_error=std_error))

    if dropped:
        logger.info("smile_from_mc dropped %d of %d strikes", len(dropped), len(strikes))
    return SmileResult(points=points, dropped=dropped)
