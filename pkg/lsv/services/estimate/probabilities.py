"""
Probability estimators
Tube, terminal-tail and small-ball probabilities from path batches.
Each estimator accepts one PathBatch or an iterable of streamed chunks;
hit counts are integers, so chunk order never changes a result.
"""
from __future__ import annotations

import logging
import math
from typing import Iterable, Tuple, Union

import numpy as np

from lsv.exceptions import EstimationError
from lsv.services.curves import CurveTriple
from lsv.services.model import evaluate
from lsv.services.simulate import KEEP_FULL, PathBatch

from .intervals import BRIDGE_CORRECTED, GRID_RESTRICTED, MCEstimate

logger = logging.getLogger(__name__)

Batches = Union[PathBatch, Iterable[PathBatch]]


def _chunks(batches: Batches):
    if isinstance(batches, PathBatch):
        return [batches]
    return batches


def _curve_on_grid(batch: PathBatch, curve: CurveTriple):
    if batch.keep != KEEP_FULL or batch.t_start != 0.0:
        raise EstimationError("tube estimates need full paths started at t = 0")
    if not math.isclose(batch.t_end, curve.T, rel_tol=1e-12):
        raise EstimationError(f"grid mismatch: batch ends at {batch.t_end}, curve at {curve.T}")
    if len(batch.grid) == len(curve.grid) and np.allclose(batch.grid, curve.grid, rtol=0, atol=1e-12):
        return curve.x_tilde, curve.v_tilde, curve.r_tilde
    p = curve.evaluate(batch.grid)
    return p.x_tilde, p.v_tilde, p.r_tilde


def tube_hits(batch: PathBatch, curve: CurveTriple, estimator: str = GRID_RESTRICTED) -> float:
    """
    Number of paths (or summed survival weight) staying within R~_t of
    (x~_t, v~_t), Euclidean norm, at every grid point.
    """
    x_c, v_c, r_c = _curve_on_grid(batch, curve)
    dist = np.hypot(batch.x_paths - x_c, batch.v_paths - v_c)
    inside = np.all(dist <= r_c, axis=1)
    if estimator == GRID_RESTRICTED:
        return int(np.count_nonzero(inside))
    if estimator != BRIDGE_CORRECTED:
        raise EstimationError(f"Unknown tube estimator {estimator!r}")

    # Brownian-bridge crossing between knots for the distance to the boundary,
    # using the larger of the two local variances.
    spec = batch.spec
    dt = float(batch.grid[1] - batch.grid[0])
    t = np.broadcast_to(batch.grid[:-1], (batch.n_paths, len(batch.grid) - 1))
    v_plus = np.maximum(batch.v_paths[:, :-1], 0.0)
    eta = evaluate(spec.eta, t, batch.x_paths[:, :-1])
    sig = evaluate(spec.sigma, t, batch.v_paths[:, :-1])
    local_var = np.maximum(eta * eta, sig * sig) * v_plus * dt
    margin = np.maximum(r_c - dist, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        exponent = np.where(local_var > 0, -2.0 * margin[:, :-1] * margin[:, 1:] / local_var, -np.inf)
    survival = np.prod(-np.expm1(exponent), axis=1)
    return float(np.sum(np.where(inside, survival, 0.0)))


def tube_probability(batches: Batches, curve: CurveTriple, estimator: str = GRID_RESTRICTED) -> MCEstimate:
    """
    P(path stays in the tube around ``curve``) checked at grid points.
    ``estimator="bridge-corrected"`` discounts between-knot exits.
    """
    hits, n = 0, 0
    for chunk in _chunks(batches):
        hits += tube_hits(chunk, curve, estimator)
        n += chunk.n_paths
    if n == 0:
        raise EstimationError("tube_probability needs at least one path")
    return MCEstimate.from_counts(hits, n, estimator=estimator)


def terminal_tail(batches: Batches, y: float) -> Tuple[MCEstimate, MCEstimate]:
    """(P(X_T > y), P(X_T < -y)) for y > 0."""
    if y <= 0:
        raise EstimationError(f"terminal_tail needs y > 0, got {y}")
    right, left, n = 0, 0, 0
    for chunk in _chunks(batches):
        x = chunk.x_terminal
        right += int(np.count_nonzero(x > y))
        left += int(np.count_nonzero(x < -y))
        n += chunk.n_paths
    if n == 0:
        raise EstimationError("terminal_tail needs at least one path")
    return MCEstimate.from_counts(right, n), MCEstimate.from_counts(left, n)


def small_ball(batches: Batches, y: float, radius: float) -> MCEstimate:
    """P(|(X_T, V_T) - (y, |y| + V0)| <= radius)."""
    if not radius > 0:
        raise EstimationError(f"radius must be > 0, got {radius}")
    hits, n = 0, 0
    for chunk in _chunks(batches):
        target_v = abs(y) + chunk.spec.V0
        dist = np.hypot(chunk.x_terminal - y, chunk.v_terminal - target_v)
        hits += int(np.count_nonzero(dist <= radius))
        n += chunk.n_paths
    if n == 0:
        raise EstimationError("small_ball needs at least one path")
    return MCEstimate.from_counts(hits, n)
