"""
Oracle smile from Carr-Madan prices
"""
from __future__ import annotations

import logging
from typing import Sequence

from lsv.services.pricing import SOURCE_ORACLE, SmilePoint, SmileResult, implied_vol_otm

from .inversion import otm_price
from .transforms import HestonParams

logger = logging.getLogger(__name__)

ZERO_ORACLE_PRICE = "zero oracle price"


def oracle_smile(params: HestonParams, ks: Sequence[float]) -> SmileResult:
    """Implied vols of out-of-the-money oracle prices (forward 1, undiscounted)."""
    points, dropped = [], []
    for k in ks:
        k = float(k)
        price = otm_price(params, k)
        if price <= 0.0:
            dropped.append((k, ZERO_ORACLE_PRICE))
            continue
        sigma = implied_vol_otm(price, 1.0, k, params.T)
        points.append(SmilePoint(k=k, T=params.T, implied_vol=sigma, source=SOURCE_ORACLE))
    if dropped:
        logger.info("oracle_smile dropped %d of %d strikes", len(dropped), len(ks))
    return SmileResult(points=points, dropped=dropped)
