"""
Model Specifications
Immutable description of a square-root LSV model:

    dX_t = -1/2 eta(t,X_t)^2 V_t dt + eta(t,X_t) sqrt(V_t) (rho dW1_t + rho_bar dW2_t),  X_0 = 0
    dV_t = beta(t,V_t) dt + sigma(t,V_t) sqrt(V_t) dW1_t,                              V_0 > 0

Coefficient functions must be pure and vectorised: they receive numpy arrays
(t, state) of equal shape and return an array (or a scalar, broadcast).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Tuple

import numpy as np

from lsv.exceptions import ModelSpecError

Coefficient = Callable[[np.ndarray, np.ndarray], Any]


def evaluate(fn: Coefficient, t, z) -> np.ndarray:
    """
    Evaluate a coefficient on arrays and broadcast the result to the input shape.
    """
    t_arr = np.asarray(t, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    shape = np.broadcast_shapes(t_arr.shape, z_arr.shape)
    out = np.asarray(fn(t_arr, z_arr), dtype=float)
    return np.broadcast_to(out, shape)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    LSV model: coefficients, correlation, initial variance, horizon and the
    declared coefficient bound metadata. Bounds are declared by the constructor,
    never inferred; ``validate_hypotheses`` audits them.
    """

    eta: Coefficient
    beta: Coefficient
    sigma: Coefficient
    rho: float
    V0: float
    T: float
    K: float
    eta_lo: float
    eta_hi: float
    sigma_lo: float
    sigma_hi: float
    family: str = "custom"
    params: Tuple[Tuple[str, float], ...] = field(default_factory=tuple)
    X0: float = 0.0

    def __post_init__(self):
        numbers = {
            "rho": self.rho, "V0": self.V0, "T": self.T, "K": self.K,
            "eta_lo": self.eta_lo, "eta_hi": self.eta_hi,
            "sigma_lo": self.sigma_lo, "sigma_hi": self.sigma_hi,
        }
        for name, value in numbers.items():
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ModelSpecError(f"{name} must be a finite number, got {value!r}")
        if not -1.0 < self.rho < 1.0:
            raise ModelSpecError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.V0 <= 0:
            raise ModelSpecError(f"V0 must be > 0, got {self.V0}")
        if self.T <= 0:
            raise ModelSpecError(f"T must be > 0, got {self.T}")
        if self.K <= 1:
            raise ModelSpecError(f"K must be > 1, got {self.K}")
        if not 0 < self.eta_lo < 1 < self.eta_hi:
            raise ModelSpecError(
                f"eta bounds must satisfy 0 < eta_lo < 1 < eta_hi, got ({self.eta_lo}, {self.eta_hi})"
            )
        if not 0 < self.sigma_lo < 1 < self.sigma_hi:
            raise ModelSpecError(
                f"sigma bounds must satisfy 0 < sigma_lo < 1 < sigma_hi, got ({self.sigma_lo}, {self.sigma_hi})"
            )
        for name in ("eta", "beta", "sigma"):
            if not callable(getattr(self, name)):
                raise ModelSpecError(f"{name} must be callable")

    @property
    def rho_bar(self) -> float:
        return math.sqrt((1.0 - self.rho) * (1.0 + self.rho))

    @property
    def param_dict(self) -> Dict[str, float]:
        return dict(self.params)

    def with_horizon(self, T: float) -> "ModelSpec":
        """Same model on another horizon."""
        return replace(self, T=T)

    def describe(self) -> Dict[str, Any]:
        """JSON-safe description used for hashing and run metadata."""
        if self.family == "custom":
            coefficients = {
                name: getattr(getattr(self, name), "__qualname__", repr(getattr(self, name)))
                for name in ("eta", "beta", "sigma")
            }
        else:
            coefficients = None
        return {
            "family": self.family,
            "params": {k: float(v) for k, v in self.params},
            "coefficients": coefficients,
            "rho": self.rho,
            "V0": self.V0,
            "T": self.T,
            "K": self.K,
            "eta_lo": self.eta_lo,
            "eta_hi": self.eta_hi,
            "sigma_lo": self.sigma_lo,
            "sigma_hi": self.sigma_hi,
        }


def spec_hash(spec: ModelSpec) -> bytes:
    """SHA-256 digest of the canonical spec description (32 bytes)."""
    payload = json.dumps(spec.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).digest()


def sigma_sigma_star_eigenvalues(spec: ModelSpec, t, x, v) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact eigenvalues (smallest, largest) of the diffusion matrix

        [[eta^2 v,          rho eta sigma v],
         [rho eta sigma v,  sigma^2 v      ]]

    evaluated at arrays (t, x, v).
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    eta = evaluate(spec.eta, t, x)
    sig = evaluate(spec.sigma, t, v)

    matrices = np.empty(np.broadcast_shapes(eta.shape, sig.shape, v.shape) + (2, 2))
    matrices[..., 0, 0] = eta * eta * v
    matrices[..., 1, 1] = sig * sig * v
    matrices[..., 0, 1] = matrices[..., 1, 0] = spec.rho * eta * sig * v
    eigenvalues = np.linalg.eigvalsh(matrices)
    return eigenvalues[..., 0], eigenvalues[..., 1]
