"""
Optimal deterministic curves
Closed-form minimisers of the tube-bound action and the helpers that
describe them. With s(t) = sinh(t/2)/sinh(T/2) and a = sqrt(y_bar/V0):

    u_t     = a s(t) - e^{-T/2} s(t) + e^{-t/2}
    v~_t    = V0 u_t^2
    x~_t    = sign(y) (v~_t - V0)
    R~_t    = 1/2 sqrt((V0 ^ 1) v~_t)

u solves u'' = u/4 with u(0) = 1 and u(T) = a.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from lsv.exceptions import DomainError, ThresholdError
from lsv.services.model import ModelSpec

logger = logging.getLogger(__name__)

RADIUS_FRACTION = 0.5  # R in the tube-constant construction
SMALL_BALL_FLOOR = 16.0


def psi(r: float) -> float:
    """psi(r) = r^-6 (ln(1/r) + 1) on (0, 1]."""
    return math.exp(log_psi(r))


def log_psi(r: float) -> float:
    if not 0.0 < r <= 1.0:
        raise DomainError(f"psi is defined on (0, 1], got r={r}")
    return -6.0 * math.log(r) + math.log1p(-math.log(r))


def y_threshold(spec: ModelSpec) -> Tuple[float, float]:
    """
    (V0 (1 + 2 sinh(T/2))^2,  2 (V0 v 1)^2 (1 + V0)).

    The first component is what the tube theorem needs; tail bounds also need the second.
    """
    first = spec.V0 * (1.0 + 2.0 * math.sinh(spec.T / 2.0)) ** 2
    second = 2.0 * max(spec.V0, 1.0) ** 2 * (1.0 + spec.V0)
    return first, second


def require_above(y: float, threshold: float, what: str) -> None:
    if not abs(y) > threshold:
        raise ThresholdError(f"{what} needs |y| > {threshold:.6g}, got |y| = {abs(y):.6g}")


def regularity_window(V0: float, y_bar: float, T: float) -> float:
    """h = sqrt(V0 / y_bar) tanh(T/2)."""
    return math.sqrt(V0 / y_bar) * math.tanh(T / 2.0)


@dataclass(frozen=True)
class CurvePoint:
    t: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    u_second: np.ndarray
    v_tilde: np.ndarray
    v_prime: np.ndarray
    v_second: np.ndarray
    x_tilde: np.ndarray
    x_prime: np.ndarray
    r_tilde: np.ndarray


@dataclass(frozen=True, eq=False)
class CurveTriple:
    """
    Discretised (x~, v~, R~) with the auxiliary u on a uniform grid.
    Derivative arrays are analytic; off-grid values come from ``evaluate``.
    """

    grid: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    v_tilde: np.ndarray
    v_prime: np.ndarray
    x_tilde: np.ndarray
    x_prime: np.ndarray
    r_tilde: np.ndarray
    y: float
    y_bar: float
    V0: float
    T: float

    @property
    def steps(self) -> int:
        return len(self.grid) - 1

    @property
    def sign(self) -> float:
        return 1.0 if self.y >= 0 else -1.0

    @property
    def h(self) -> float:
        return regularity_window(self.V0, self.y_bar, self.T)

    def evaluate(self, t) -> CurvePoint:
        """Closed-form curve values and derivatives at arbitrary t in [0, T]."""
        return _closed_form(np.asarray(t, dtype=float), self.y, self.y_bar, self.V0, self.T)

    def euler_lagrange_residual(self) -> float:
        """
        max over interior knots of |v''/v' - v'/(2v) - v/(2v')| relative to |v''/v'|,
        using analytic derivatives.
        """
        p = self.evaluate(self.grid[1:-1])
        lhs = p.v_second / p.v_prime
        rhs = p.v_prime / (2.0 * p.v_tilde) + p.v_tilde / (2.0 * p.v_prime)
        return float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {
                "t": float(self.grid[i]),
                "u": float(self.u[i]),
                "u_prime": float(self.u_prime[i]),
                "x_tilde": float(self.x_tilde[i]),
                "v_tilde": float(self.v_tilde[i]),
                "r_tilde": float(self.r_tilde[i]),
            }
            for i in range(len(self.grid))
        ]


def _closed_form(t: np.ndarray, y: float, y_bar: float, V0: float, T: float) -> CurvePoint:
    a = math.sqrt(y_bar / V0)
    sinh_T = math.sinh(T / 2.0)
    lead = a - math.exp(-T / 2.0)

    s = np.sinh(t / 2.0) / sinh_T
    u = lead * s + np.exp(-t / 2.0)
    u_prime = lead * np.cosh(t / 2.0) / (2.0 * sinh_T) - 0.5 * np.exp(-t / 2.0)
    u_second = u / 4.0

    v = V0 * u * u
    v_prime = 2.0 * V0 * u * u_prime
    v_second = 2.0 * V0 * (u_prime * u_prime + u * u_second)

    sign = 1.0 if y >= 0 else -1.0
    return CurvePoint(
        t=t,
        u=u,
        u_prime=u_prime,
        u_second=u_second,
        v_tilde=v,
        v_prime=v_prime,
        v_second=v_second,
        x_tilde=sign * (v - V0),
        x_prime=sign * v_prime,
        r_tilde=0.5 * np.sqrt(min(V0, 1.0) * v),
    )


def curve_for_arrival(y: float, y_bar: float, V0: float, T: float, steps: int) -> CurveTriple:
    """
    Curve reaching v~_T = y_bar, without any threshold check. Used for the
    shifted tail curve and for variational comparisons.
    """
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps}")
    if y_bar <= 0 or V0 <= 0 or T <= 0:
        raise DomainError("y_bar, V0 and T must be positive")

    grid = np.linspace(0.0, T, steps + 1)
    p = _closed_form(grid, y, y_bar, V0, T)

    # Pin the boundary values exactly
    u = p.u.copy()
    u[0] = 1.0
    u[-1] = math.sqrt(y_bar / V0)
    v = V0 * u * u
    v[0] = V0
    sign = 1.0 if y >= 0 else -1.0
    return CurveTriple(
        grid=grid,
        u=u,
        u_prime=p.u_prime,
        v_tilde=v,
        v_prime=p.v_prime,
        x_tilde=sign * (v - V0),
        x_prime=p.x_prime,
        r_tilde=0.5 * np.sqrt(min(V0, 1.0) * v),
        y=float(y),
        y_bar=float(y_bar),
        V0=float(V0),
        T=float(T),
    )


def optimal_curves(y: float, spec: ModelSpec, steps: int = 1000) -> CurveTriple:
    """
    Optimal curves for a target log-price y, on ``steps`` uniform intervals.
    Requires |y| above the first component of ``y_threshold``.
    """
    if y == 0:
        raise DomainError("y must be non-zero")
    require_above(y, y_threshold(spec)[0], "optimal_curves")
    curve = curve_for_arrival(y, abs(y) + spec.V0, spec.V0, spec.T, steps)
    logger.debug("Built optimal curve y=%s V0=%s T=%s steps=%d", y, spec.V0, spec.T, steps)
    return curve


def class_membership_violations(curve: CurveTriple, mu: float = 4.0) -> List[Tuple[float, float, float]]:
    """
    Pairs (t, s, ratio) with |s - t| < h where v~'(s) > mu v~'(t).
    Empty when v~' belongs to L(mu, h).
    """
    h = curve.h
    t = curve.grid
    vp = curve.v_prime
    close = np.abs(t[:, None] - t[None, :]) < h
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = vp[None, :] / vp[:, None]
    bad = close & ~(vp[None, :] <= mu * vp[:, None])
    rows, cols = np.nonzero(bad)
    return [(float(t[i]), float(t[j]), float(ratio[i, j])) for i, j in zip(rows, cols)]
