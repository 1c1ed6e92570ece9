"""
Hypothesis audit
Numerical check of the Lipschitz regularity and growth hypotheses on
quasi-random sample pairs. Violations are data, never exceptions.

Sampling domain: x in [-10, 10], v in [0, 100 V0], t in [0, T]. Behaviour
outside that box is not exercised. Only the Lipschitz form of regularity is tested;
Hölder-1/2 time regularity, which the hypothesis also admits, is reported as a failure.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from lsv.conf import get_setting

from .specs import ModelSpec, evaluate

logger = logging.getLogger(__name__)

X_RANGE = (-10.0, 10.0)
V_SCALE = 100.0
TOLERANCE = 1e-12


@dataclass(frozen=True)
class Violation:
    kind: str
    point: Tuple[Any, ...]
    observed: float

    def as_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "point": [list(p) if isinstance(p, tuple) else p for p in self.point],
                "observed": self.observed}


@dataclass
class HypothesisReport:
    r_violations: List[Violation] = field(default_factory=list)
    g_violations: List[Violation] = field(default_factory=list)
    sampled_points: int = 0

    @property
    def passed(self) -> bool:
        return not self.r_violations and not self.g_violations

    def summary(self) -> str:
        if self.passed:
            return f"regularity and growth hold on {self.sampled_points} sampled points"
        kinds = sorted({v.kind for v in self.r_violations + self.g_violations})
        return (
            f"{len(self.r_violations)} regularity and {len(self.g_violations)} growth violations "
            f"on {self.sampled_points} sampled points: {', '.join(kinds)}"
        )

    def as_dict(self, limit: Optional[int] = 50) -> Dict[str, Any]:
        """JSON-safe form; ``limit`` caps the listed violations per kind of list."""
        r = self.r_violations if limit is None else self.r_violations[:limit]
        g = self.g_violations if limit is None else self.g_violations[:limit]
        return {
            "passed": self.passed,
            "sampled_points": self.sampled_points,
            "r_violation_count": len(self.r_violations),
            "g_violation_count": len(self.g_violations),
            "r_violations": [v.as_dict() for v in r],
            "g_violations": [v.as_dict() for v in g],
        }


def _lipschitz_violations(kind, values_a, values_b, s, a, t, b, K) -> List[Violation]:
    diff = np.abs(values_a - values_b)
    dist = np.abs(a - b) + np.abs(s - t)
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = ~(diff <= K * dist * (1.0 + TOLERANCE) + TOLERANCE)
        ratio = np.where(dist > 0, diff / dist, np.inf)
    return [
        Violation(kind, ((float(s[i]), float(a[i])), (float(t[i]), float(b[i]))), float(ratio[i]))
        for i in np.flatnonzero(bad)
    ]


def _range_violations(kind, values, t, z, lo, hi) -> List[Violation]:
    slack = TOLERANCE * max(1.0, abs(hi))
    bad = ~((values >= lo - slack) & (values <= hi + slack))
    return [Violation(kind, (float(t[i]), float(z[i])), float(values[i])) for i in np.flatnonzero(bad)]


def validate_hypotheses(spec: ModelSpec, samples: Optional[int] = None, seed: int = 0) -> HypothesisReport:
    """
    Audit regularity and growth for ``spec``:

    - |eta(s,x) - eta(t,y)| <= K (|x-y| + |s-t|), same for sigma in (t, v)
    - eta_lo <= eta <= eta_hi, sigma_lo <= sigma <= sigma_hi
    - |beta(t,v)| <= K (1 + v)

    Samples are pairs from a scrambled Halton sequence seeded by ``seed``.
    """
    if samples is None:
        samples = int(get_setting("HYPOTHESIS_SAMPLES"))
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")

    # Columns: (s, x, t, y) for eta; (s', v, t', w) for sigma and beta
    sampler = qmc.Halton(d=8, scramble=True, seed=seed)
    u = sampler.random(samples)
    v_hi = V_SCALE * spec.V0
    lower = [0.0, X_RANGE[0], 0.0, X_RANGE[0], 0.0, 0.0, 0.0, 0.0]
    upper = [spec.T, X_RANGE[1], spec.T, X_RANGE[1], spec.T, v_hi, spec.T, v_hi]
    pts = qmc.scale(u, lower, upper)
    s, x, t, y, sv, v, tv, w = pts.T

    with np.errstate(all="ignore"):
        eta_a = evaluate(spec.eta, s, x)
        eta_b = evaluate(spec.eta, t, y)
        sig_a = evaluate(spec.sigma, sv, v)
        sig_b = evaluate(spec.sigma, tv, w)
        beta_a = evaluate(spec.beta, sv, v)
        beta_b = evaluate(spec.beta, tv, w)

    report = HypothesisReport(sampled_points=samples)

    # Step 1: regularity
    report.r_violations += _lipschitz_violations("eta_lipschitz", eta_a, eta_b, s, x, t, y, spec.K)
    report.r_violations += _lipschitz_violations("sigma_lipschitz", sig_a, sig_b, sv, v, tv, w, spec.K)

    # Step 2: boundedness and growth
    for label, values, tt, zz in (("eta", eta_a, s, x), ("eta", eta_b, t, y)):
        report.g_violations += _range_violations(f"{label}_bounds", values, tt, zz, spec.eta_lo, spec.eta_hi)
    for values, tt, zz in ((sig_a, sv, v), (sig_b, tv, w)):
        report.g_violations += _range_violations("sigma_bounds", values, tt, zz, spec.sigma_lo, spec.sigma_hi)
    for values, tt, zz in ((beta_a, sv, v), (beta_b, tv, w)):
        growth = spec.K * (1.0 + zz)
        bad = ~(np.abs(values) <= growth * (1.0 + TOLERANCE))
        report.g_violations += [
            Violation("beta_growth", (float(tt[i]), float(zz[i])), float(values[i])) for i in np.flatnonzero(bad)
        ]

    if report.passed:
        logger.debug("Hypotheses hold for family=%s on %d samples", spec.family, samples)
    else:
        logger.warning("Hypothesis audit failed for family=%s: %s", spec.family, report.summary())
    return report
