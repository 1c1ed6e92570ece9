"""
Moment estimators
Exponential moments of X_T and the increment scaling of V.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import special, stats

from lsv.exceptions import EstimationError
from lsv.services.model import ModelSpec
from lsv.services.simulate import PathBatch, Scheme, iter_batches

logger = logging.getLogger(__name__)

SHARE_LIMIT = 0.01


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    estimate: float
    std_error: float
    max_share: float
    n: int

    @property
    def unreliable(self) -> bool:
        """One path carries more than 1% of the sum: heavy-tail regime."""
        return self.max_share > SHARE_LIMIT

    def as_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "max_share": self.max_share,
            "unreliable": self.unreliable,
            "n": self.n,
        }


def _terminal(batch) -> np.ndarray:
    if isinstance(batch, PathBatch):
        return batch.x_terminal
    return np.asarray(batch, dtype=float)


def exp_moment(batch, p: float) -> MomentEstimate:
    """
    Sample mean of e^{p X_T} with its standard error and the largest single-path
    share of the sum (share > 0.01 flags an unreliable estimate).
    """
    x = _terminal(batch)
    n = x.size
    if n == 0:
        raise EstimationError("exp_moment needs at least one path")
    logs = p * x
    top = float(np.max(logs))
    scaled = np.exp(logs - top)
    log_sum = float(special.logsumexp(logs))
    estimate = math.exp(log_sum - math.log(n))
    std_error = float(np.std(scaled, ddof=1)) * math.exp(top) / math.sqrt(n) if n > 1 else math.inf
    return MomentEstimate(
        p=float(p),
        estimate=estimate,
        std_error=std_error,
        max_share=math.exp(top - log_sum),
        n=n,
    )


@dataclass(frozen=True)
class ScalingFit:
    p: int
    dts: List[float]
    moments: List[float]
    slope: float
    intercept: float
    slope_stderr: float

    def as_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "dts": self.dts,
            "moments": self.moments,
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
        }


def increment_scaling(
    spec: ModelSpec,
    p: int,
    dts: Sequence[float],
    n: int,
    seed: int = 0,
    *,
    steps_per_interval: int = 50,
    scheme=Scheme.EULER_FULL_TRUNCATION,
    workers: Optional[int] = None,
) -> ScalingFit:
    """
    Fit the log-log slope of E[sup_{r in [0, dt]} |V_r - V_0|^{2p}] against dt.
    The increment bound predicts a slope of at least p.
    """
    if p < 1 or int(p) != p:
        raise EstimationError(f"p must be an integer >= 1, got {p}")
    values = sorted({float(dt) for dt in dts})
    if len(values) < 3:
        raise EstimationError(f"increment_scaling needs >= 3 distinct durations, got {len(values)}")
    if values[0] <= 0 or values[-1] > spec.T:
        raise EstimationError(f"durations must lie in (0, T={spec.T}]")
    if values[-1] / values[0] < 10.0 * (1.0 - 1e-9):
        raise EstimationError("durations must span at least a decade")

    moments = []
    for dt in values:
        total, count = 0.0, 0
        for chunk in iter_batches(
            spec, n, steps_per_interval, seed, scheme,
            t_start=0.0, t_end=dt, workers=workers,
        ):
            sup = np.max(np.abs(chunk.v_paths - spec.V0), axis=1)
            total += float(np.sum(sup ** (2 * p)))
            count += chunk.n_paths
        moments.append(total / count)
        logger.debug("increment_scaling p=%d dt=%g moment=%.6g", p, dt, moments[-1])

    result = stats.linregress(np.log(values), np.log(moments))
    return ScalingFit(
        p=int(p),
        dts=values,
        moments=moments,
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_stderr=float(result.stderr),
    )
