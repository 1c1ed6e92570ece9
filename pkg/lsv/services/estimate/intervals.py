"""
Exact binomial intervals
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Tuple

from scipy import stats

from lsv.exceptions import EstimationError

CONFIDENCE = 0.95

GRID_RESTRICTED = "grid-restricted"
BRIDGE_CORRECTED = "bridge-corrected"


def clopper_pearson(hits: float, n: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    """Two-sided Clopper-Pearson interval for ``hits`` successes out of ``n``."""
    if n <= 0:
        raise EstimationError("Clopper-Pearson needs at least one sample")
    if not 0 <= hits <= n:
        raise EstimationError(f"hits must lie in [0, n], got {hits} of {n}")
    alpha = 1.0 - confidence
    low = 0.0 if hits == 0 else float(stats.beta.ppf(alpha / 2.0, hits, n - hits + 1))
    high = 1.0 if hits == n else float(stats.beta.ppf(1.0 - alpha / 2.0, hits + 1, n - hits))
    return low, high


@dataclass(frozen=True)
class MCEstimate:
    """
    Monte Carlo probability with an exact 95% interval. ``hits`` is an integer
    count except for bridge-corrected tube estimates, where it is the summed
    per-path survival weight.
    """

    p_hat: float
    ci_low: float
    ci_high: float
    n: int
    hits: float
    estimator: str = GRID_RESTRICTED

    @classmethod
    def from_counts(cls, hits: float, n: int, estimator: str = GRID_RESTRICTED) -> "MCEstimate":
        low, high = clopper_pearson(hits, n)
        p_hat = hits / n
        return cls(p_hat=p_hat, ci_low=min(low, p_hat), ci_high=max(high, p_hat), n=n, hits=hits,
                   estimator=estimator)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n": self.n,
            "hits": self.hits,
            "estimator": self.estimator,
        }
