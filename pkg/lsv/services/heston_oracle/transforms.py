"""
Heston transform oracle
Characteristic function in the branch-stable ("little trap") form, moment
explosion times and critical moments. X_T is the log-forward with X_0 = 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict

import numpy as np

from lsv.exceptions import ModelSpecError, OracleDomainError
from lsv.services.model import ModelSpec

logger = logging.getLogger(__name__)

MOMENT_CAP = 1e6
MOMENT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class HestonParams:
    kappa: float
    theta: float
    xi: float
    rho: float
    V0: float
    T: float

    def __post_init__(self):
        for name in ("kappa", "theta", "xi", "V0", "T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelSpecError(f"{name} must be a positive finite number, got {value}")
        if not -1.0 < self.rho < 1.0:
            raise ModelSpecError(f"rho must lie in (-1, 1), got {self.rho}")

    @classmethod
    def from_spec(cls, spec: ModelSpec) -> "HestonParams":
        if spec.family != "heston":
            raise ModelSpecError(f"The Fourier oracle covers the heston family only, got '{spec.family}'")
        p = spec.param_dict
        return cls(kappa=p["kappa"], theta=p["theta"], xi=p["xi"], rho=spec.rho, V0=spec.V0, T=spec.T)

    def as_dict(self) -> Dict[str, Any]:
        return {"kappa": self.kappa, "theta": self.theta, "xi": self.xi, "rho": self.rho, "V0": self.V0, "T": self.T}


def _log_char_fn(params: HestonParams, u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    kappa, theta, xi, rho, T = params.kappa, params.theta, params.xi, params.rho, params.T
    iu = 1j * u
    beta = kappa - rho * xi * iu
    d = np.sqrt(beta * beta + xi * xi * (iu + u * u))
    g = (beta - d) / (beta + d)
    edt = np.exp(-d * T)
    C = kappa * theta / xi ** 2 * ((beta - d) * T - 2.0 * np.log((1.0 - g * edt) / (1.0 - g)))
    D = (beta - d) / xi ** 2 * (1.0 - edt) / (1.0 - g * edt)
    return C + D * params.V0


def char_fn(params: HestonParams, u):
    """
    E[exp(i u X_T)] for real or complex u. For complex u the strip condition
    -q* < -Im(u) < p* is checked against the explosion time.
    """
    u_arr = np.asarray(u, dtype=complex)
    omega = -u_arr.imag
    if np.any(omega != 0.0):
        cm = critical_moment(params)
        lo, hi = -cm.q_star, cm.p_star
        if np.any((omega <= lo) | (omega >= hi)):
            raise OracleDomainError(
                f"transform argument outside the strip: -Im(u) must lie in ({lo:.6g}, {hi:.6g})"
            )
    with np.errstate(all="ignore"):
        value = np.exp(_log_char_fn(params, u_arr))
    if not np.all(np.isfinite(value)):
        raise OracleDomainError("characteristic function is not finite at the requested argument")
    return value if np.ndim(u) else complex(value)


def log_moment(params: HestonParams, omega: float) -> float:
    """log E[exp(omega X_T)] inside the strip."""
    return float(np.real(_log_char_fn(params, -1j * omega)))


def moment(params: HestonParams, p: float) -> float:
    """E[exp(p X_T)]; raises OracleDomainError outside (-q*, p*)."""
    return float(np.real(char_fn(params, -1j * p)))


def explosion_time(params: HestonParams, omega: float) -> float:
    """
    Time at which E[exp(omega X_t)] becomes infinite (inf when it never does).
    """
    if omega * (omega - 1.0) <= 0.0:
        return math.inf
    kappa, xi, rho = params.kappa, params.xi, params.rho
    k = rho * xi * omega - kappa
    disc = k * k - xi * xi * (omega * omega - omega)
    if disc >= 0.0:
        if k < 0.0:
            return math.inf
        if disc == 0.0:
            return 2.0 / k
        root = math.sqrt(disc)
        return math.log((k + root) / (k - root)) / root
    root = math.sqrt(-disc)
    if k == 0.0:
        return math.pi / root
    return 2.0 / root * (math.atan(root / k) + (math.pi if k < 0.0 else 0.0))


@dataclass(frozen=True)
class CriticalMoments:
    p_star: float
    q_star: float
    p_capped: bool
    q_capped: bool

    def as_dict(self) -> Dict[str, Any]:
        return {"p_star": self.p_star, "q_star": self.q_star, "p_capped": self.p_capped, "q_capped": self.q_capped}


def _critical(params: HestonParams, sign: float, start: float) -> tuple:
    """Largest |omega| beyond ``start`` on one side with explosion time > T."""
    T = params.T
    lo = start
    hi = max(2.0 * start, start + 1.0)
    while explosion_time(params, sign * hi) > T:
        lo = hi
        hi *= 2.0
        if hi > MOMENT_CAP:
            return MOMENT_CAP, True
    while hi - lo > MOMENT_TOLERANCE * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if explosion_time(params, sign * mid) > T:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


@lru_cache(maxsize=256)
def critical_moment(params: HestonParams) -> CriticalMoments:
    """
    (p*, q*): supremum of p with E[e^{p X_T}] < inf and of q with
    E[e^{-q X_T}] < inf, by bisection on the explosion time. Values beyond
    1e6 are reported as 1e6 with a cap flag.
    """
    p_star, p_capped = _critical(params, 1.0, 1.0)
    q_star, q_capped = _critical(params, -1.0, 0.0)
    logger.debug("Critical moments for %s: p*=%.8g q*=%.8g", params, p_star, q_star)
    return CriticalMoments(p_star=p_star, q_star=q_star, p_capped=p_capped, q_capped=q_capped)
