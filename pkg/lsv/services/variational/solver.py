"""
Discrete action oracle
Minimises the discrete version of

    A(v) = int_0^T ((v')^2 / v + v) dt,   v(0) = V0, v(T) = y_bar

with Newton on the interior knots, and checks the closed-form curves
against it. Under v = V0 u^2 the integrand becomes V0 (4 u'^2 + u^2),
whose Euler-Lagrange equation is u'' = u/4.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, linalg

from lsv.exceptions import ConvergenceError, DomainError
from lsv.services.curves import curve_for_arrival

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-10
MAX_ITERATIONS = 500
MAX_HALVINGS = 60
DEGENERATE_SLOPE = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    grid: np.ndarray
    values: np.ndarray
    iterations: int = 0
    newton_history: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise DomainError("grid and values must have the same length")
        if len(self.grid) < 2:
            raise DomainError("a curve needs at least two knots")
        if not np.all(self.values > 0):
            raise DomainError("curve values must be strictly positive")

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def T(self) -> float:
        return float(self.grid[-1])


def _cells(values: np.ndarray, h: float):
    a, b = values[:-1], values[1:]
    d = (b - a) / h
    w = 0.5 * (1.0 / a + 1.0 / b)
    return a, b, d, w


def _discrete_action(values: np.ndarray, h: float) -> float:
    a, b, d, w = _cells(values, h)
    return float(h * np.sum(d * d * w + 0.5 * (a + b)))


def action(curve: DiscreteCurve) -> float:
    """
    Trapezoid action: each cell contributes h [d^2 (1/v_i + 1/v_{i+1})/2 + (v_i + v_{i+1})/2]
    with forward difference d.
    """
    return _discrete_action(curve.values, curve.h)


def el_residual(curve: DiscreteCurve) -> float:
    """
    max over interior knots of |v''/v' - v'/(2v) - v/(2v')| with central differences.
    """
    v = curve.values
    if len(v) < 3:
        raise DomainError("el_residual needs at least one interior knot")
    h = curve.h
    vp = (v[2:] - v[:-2]) / (2.0 * h)
    if np.any(np.abs(vp) < DEGENERATE_SLOPE):
        raise DomainError("Euler-Lagrange equation degenerates where v' = 0")
    vpp = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    vi = v[1:-1]
    return float(np.max(np.abs(vpp / vp - vp / (2.0 * vi) - vi / (2.0 * vp))))


def to_u_residual(curve: DiscreteCurve, V0: float) -> float:
    """max |u'' - u/4| at interior knots for u = sqrt(v / V0)."""
    u = np.sqrt(curve.values / V0)
    h = curve.h
    upp = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    return float(np.max(np.abs(upp - u[1:-1] / 4.0)))


def _gradient_and_bands(values: np.ndarray, h: float):
    a, b, d, w = _cells(values, h)
    grad_a = h * (-2.0 * d * w / h - d * d / (2.0 * a * a) + 0.5)
    grad_b = h * (2.0 * d * w / h - d * d / (2.0 * b * b) + 0.5)
    h_aa = h * (2.0 * w / h ** 2 + 2.0 * d / (h * a * a) + d * d / a ** 3)
    h_ab = h * (-2.0 * w / h ** 2 + d / (h * b * b) - d / (h * a * a))
    h_bb = h * (2.0 * w / h ** 2 - 2.0 * d / (h * b * b) + d * d / b ** 3)

    grad = np.zeros_like(values)
    grad[:-1] += grad_a
    grad[1:] += grad_b
    diag = np.zeros_like(values)
    diag[:-1] += h_aa
    diag[1:] += h_bb
    return grad[1:-1], diag[1:-1], h_ab[1:-1]


def minimize_action(
    V0: float,
    y_bar: float,
    T: float,
    N: int,
    init: Optional[DiscreteCurve] = None,
    *,
    tol: float = GRADIENT_TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> DiscreteCurve:
    """
    Damped Newton on the discrete Euler-Lagrange system over interior knots.
    Steps are halved until the iterate stays positive and the action does not increase.
    """
    if not (V0 > 0 and y_bar >= V0):
        raise DomainError(f"minimize_action needs y_bar >= V0 > 0, got V0={V0}, y_bar={y_bar}")
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")

    if init is None:
        init = straight_line(V0, y_bar, T, N)
    if len(init.values) != N + 1 or not math.isclose(init.T, T, rel_tol=1e-12):
        raise DomainError("init must live on the N-interval uniform grid over [0, T]")
    if not (math.isclose(init.values[0], V0, rel_tol=1e-12) and math.isclose(init.values[-1], y_bar, rel_tol=1e-12)):
        raise DomainError("init must satisfy v(0) = V0 and v(T) = y_bar")

    h = T / N
    v = init.values.astype(float).copy()
    v[0], v[-1] = V0, y_bar
    current = _discrete_action(v, h)
    history = []

    for iteration in range(max_iter + 1):
        grad, diag, off = _gradient_and_bands(v, h)
        norm = float(np.max(np.abs(grad))) if grad.size else 0.0
        history.append(norm)
        logger.debug("Newton iter=%d action=%.17g |grad|=%.3e", iteration, current, norm)
        if norm <= tol:
            return DiscreteCurve(grid=init.grid.copy(), values=v, iterations=iteration,
                                 newton_history=tuple(history))
        if iteration == max_iter:
            break

        bands = np.zeros((3, diag.size))
        bands[0, 1:] = off
        bands[1] = diag
        bands[2, :-1] = off
        step = -linalg.solve_banded((1, 1), bands, grad)

        # Step 1: halve until positive and non-increasing
        alpha = 1.0
        for _ in range(MAX_HALVINGS):
            trial = v.copy()
            trial[1:-1] += alpha * step
            if np.all(trial > 0):
                trial_action = _discrete_action(trial, h)
                if trial_action <= current + 1e-14 * abs(current):
                    break
            alpha *= 0.5
        else:
            raise ConvergenceError("Newton line search failed to find an admissible step", last_iterate=v)

        v, current = trial, trial_action

    raise ConvergenceError(
        f"Newton did not reach |grad| <= {tol} in {max_iter} iterations (last {history[-1]:.3e})",
        last_iterate=v,
    )


def extrapolated_minimizer(
    V0: float,
    y_bar: float,
    T: float,
    N: int,
    *,
    tol: float = GRADIENT_TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> DiscreteCurve:
    """
    Richardson combination (4 v_2N - v_N) / 3 of the minimisers on N and 2N
    intervals, sampled on the N grid. Cancels the O(h^2) term of the knot values,
    which the raw minimiser carries with a large constant near t = 0.
    """
    coarse = minimize_action(V0, y_bar, T, N, init=analytic_curve(V0, y_bar, T, N), tol=tol, max_iter=max_iter)
    fine = minimize_action(V0, y_bar, T, 2 * N, init=analytic_curve(V0, y_bar, T, 2 * N), tol=tol, max_iter=max_iter)
    values = (4.0 * fine.values[::2] - coarse.values) / 3.0
    values[0], values[-1] = V0, y_bar
    return DiscreteCurve(
        grid=coarse.grid.copy(),
        values=values,
        iterations=coarse.iterations + fine.iterations,
        newton_history=fine.newton_history,
    )


def analytic_curve(V0: float, y_bar: float, T: float, N: int) -> DiscreteCurve:
    """Closed-form minimiser v = V0 u^2 sampled on N uniform intervals."""
    curve = curve_for_arrival(1.0, y_bar, V0, T, N)
    return DiscreteCurve(grid=curve.grid, values=curve.v_tilde.copy())


def straight_line(V0: float, y_bar: float, T: float, N: int) -> DiscreteCurve:
    grid = np.linspace(0.0, T, N + 1)
    return DiscreteCurve(grid=grid, values=np.linspace(V0, y_bar, N + 1))


def closed_form_action(V0: float, y_bar: float, T: float) -> float:
    """V0 int_0^T (4 u'^2 + u^2) dt along the closed-form u, by quadrature."""
    curve = curve_for_arrival(1.0, y_bar, V0, T, 2)

    def integrand(t):
        p = curve.evaluate(t)
        return float(V0 * (4.0 * p.u_prime ** 2 + p.u ** 2))

    value, _ = integrate.quad(integrand, 0.0, T, epsabs=1e-13, epsrel=1e-12)
    return value
