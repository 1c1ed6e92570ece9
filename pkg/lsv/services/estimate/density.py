"""
Kernel density of X_T
"""
from __future__ import annotations

import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from lsv.exceptions import EstimationError
from lsv.services.simulate import PathBatch

logger = logging.getLogger(__name__)

MIN_EFFECTIVE = 30
KERNEL_REACH = 3.0  # bandwidths
RECOMMENDED_SAMPLES = 10_000


def kde_log_density(
    batch: Union[PathBatch, np.ndarray],
    y_grid: Sequence[float],
    bandwidth_rule: Union[str, float] = "silverman",
    *,
    min_effective: int = MIN_EFFECTIVE,
) -> List[Tuple[float, float]]:
    """
    Gaussian KDE of X_T evaluated at ``y_grid``. Points with fewer than
    ``min_effective`` samples within three bandwidths are reported as NaN.
    """
    grid = np.asarray(list(y_grid), dtype=float)
    if grid.size == 0:
        raise EstimationError("kde_log_density needs a non-empty grid")
    samples = batch.x_terminal if isinstance(batch, PathBatch) else np.asarray(batch, dtype=float).ravel()
    if samples.size < 2:
        raise EstimationError("kde_log_density needs at least two samples")
    if samples.size < RECOMMENDED_SAMPLES:
        logger.warning("kde_log_density on %d samples; at least %d recommended", samples.size, RECOMMENDED_SAMPLES)

    kde = stats.gaussian_kde(samples, bw_method=bandwidth_rule)
    bandwidth = math.sqrt(float(kde.covariance[0, 0]))
    log_density = kde.logpdf(grid)

    ordered = np.sort(samples)
    reach = KERNEL_REACH * bandwidth
    counts = np.searchsorted(ordered, grid + reach, side="right") - np.searchsorted(ordered, grid - reach, side="left")
    log_density = np.where(counts >= min_effective, log_density, np.nan)
    return [(float(y), float(value)) for y, value in zip(grid, log_density)]
