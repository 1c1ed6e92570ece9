"""
Constant chain
Everything the tube, tail, small-ball and density bounds are built from:
c, lambda, gamma, L_T, Gamma, Q(mu), c*, c_T, d_T, e_T, eps0, delta0, q.
Exponent magnitudes are LogMagnitude values.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import special

from lsv.conf import get_setting
from lsv.exceptions import DomainError, NotComputableError
from lsv.services.model import ModelSpec, sigma_sigma_star_eigenvalues

from .curves import RADIUS_FRACTION, regularity_window
from .logdomain import LogMagnitude

logger = logging.getLogger(__name__)

MU = 4
# log(8^12 e^2 mu^73) with mu = 4
LOG_Q_MU = 36.0 * math.log(2.0) + 2.0 + 146.0 * math.log(2.0)
SERIES_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BoundConstants:
    """
    The constant chain for one spec. ``tech_constants`` fills only the first
    block; ``bound_constants`` fills everything. ``h`` is set only when a
    target y was supplied.
    """

    # Model envelope (radius fraction R = 1/2)
    c: float
    lam: float
    gamma: float
    L: float
    log_L_T: float
    C2: float
    rho_bar: float
    R: float = RADIUS_FRACTION

    # Tube constant
    mu: int = MU
    log_q_mu: float = LOG_Q_MU
    log_phi: Optional[float] = None
    log_Q: Optional[float] = None
    Gamma: Optional[float] = None
    log_Gamma_T: Optional[float] = None
    log_c_star: Optional[float] = None
    c_star_source: Optional[str] = None
    h: Optional[float] = None

    # Time constants
    c_T: Optional[LogMagnitude] = None
    d_T: Optional[LogMagnitude] = None
    e_T: Optional[LogMagnitude] = None

    # Short-interval constants
    epsilon0: Optional[float] = None
    delta0: Optional[float] = None
    q_sup: Optional[float] = None

    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def L_T(self) -> float:
        return math.exp(self.log_L_T)

    @property
    def c_star(self) -> Optional[float]:
        return None if self.log_c_star is None else math.exp(self.log_c_star)

    @property
    def phi(self) -> Optional[float]:
        return None if self.log_phi is None else math.exp(self.log_phi)

    def as_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for key, value in asdict(self).items():
            if key == "extra":
                out.update(value)
            elif key in ("c_T", "d_T", "e_T"):
                magnitude = getattr(self, key)
                out[key] = magnitude.as_dict() if magnitude is not None else None
            else:
                out[key] = value
        out["lambda"] = out.pop("lam")
        out["L_T"] = self.L_T
        out["c_star"] = self.c_star
        return out


def tech_constants(spec: ModelSpec, *, C2: Optional[float] = None, L: Optional[float] = None) -> BoundConstants:
    """
    Partial chain: c, lambda, gamma, L and L_T = L e^{C2 T^2}.

    lambda takes the conservative 1/2-factor branch of the ellipticity bound,
    gamma = (eta_hi^2 + sigma_hi^2)(1 + R).
    """
    R = RADIUS_FRACTION
    C2 = float(get_setting("C2") if C2 is None else C2)
    if L is None:
        L = get_setting("L_OVERRIDE")

    V0 = spec.V0
    c = 2.0 * (0.5 * spec.eta_hi ** 2 + spec.K + 2.0 * spec.eta_hi + spec.sigma_hi) * (1.0 + R) * max(1.0, V0) / V0
    lam = (
        spec.eta_lo ** 2 * spec.sigma_lo ** 2
        / (2.0 * (spec.eta_hi ** 2 + spec.sigma_hi ** 2))
        * (1.0 - R) / (1.0 + R)
    )
    gamma = (spec.eta_hi ** 2 + spec.sigma_hi ** 2) * (1.0 + R)
    if L is None:
        L = C2 * (
            8.0 * (1.0 + R) * spec.K ** 2 * max(V0, 1.0) / V0
            + max(spec.eta_hi ** 2, spec.sigma_hi ** 2) / ((1.0 - R) * V0 ** 2)
        )
    if L <= 0 or C2 <= 0:
        raise DomainError(f"C2 and L must be positive, got C2={C2}, L={L}")

    return BoundConstants(
        c=c,
        lam=lam,
        gamma=gamma,
        L=float(L),
        log_L_T=math.log(L) + C2 * spec.T ** 2,
        C2=C2,
        rho_bar=spec.rho_bar,
        R=R,
    )


def log_tube_Q(log_q_mu: float, log_phi: float) -> float:
    """log Q(mu) = log q - 2 log phi + log(log q - log phi)."""
    return log_q_mu - 2.0 * log_phi + math.log(log_q_mu - log_phi)


def _time_constants(log_c_star: float, T: float) -> Tuple[LogMagnitude, LogMagnitude, LogMagnitude]:
    c_star = math.exp(log_c_star)
    log_T = math.log(T)
    # c_T = c* (1/T + 1) e^{c* T^2}
    c_T = LogMagnitude(log_c_star + 2.0 * log_T, log_c_star + math.log1p(1.0 / T))
    # d_T = 2 c* (1/T^2 + 1) e^{(c* + 1) T^2}
    d_T = LogMagnitude(
        log_c_star + 2.0 * log_T,
        math.log(2.0) + log_c_star + math.log1p(1.0 / T ** 2) + T ** 2,
    )
    # e_T = 136 c* (1/T^2 + 1) e^{(c* + 1) T}
    e_T = LogMagnitude(
        log_c_star + log_T,
        math.log(136.0) + log_c_star + math.log1p(1.0 / T ** 2) + T,
    )
    logger.debug("Time constants for c*=%.6g T=%s", c_star, T)
    return c_T, d_T, e_T


def bound_constants(
    spec: ModelSpec,
    y: Optional[float] = None,
    *,
    C2: Optional[float] = None,
    L: Optional[float] = None,
    c_star: Optional[float] = None,
    c_star_floor: Optional[float] = None,
) -> BoundConstants:
    """
    Full chain for ``spec``. ``c_star`` overrides the constructed c*;
    otherwise

        c* = max(floor, 4 (20 V0 + 1) Gamma (gamma^2 q / lambda^2) ln(gamma q / lambda))

    with Gamma = 1 v 2 (c^2 + L) / ((V0 ^ 1) lambda).
    """
    consts = tech_constants(spec, C2=C2, L=L)
    floor = float(get_setting("C_STAR_FLOOR") if c_star_floor is None else c_star_floor)
    if floor < 1.0:
        raise DomainError(f"c* floor must be >= 1, got {floor}")

    rho_bar = spec.rho_bar
    log_lam = math.log(consts.lam)
    log_gamma = math.log(consts.gamma)

    # Step 1: tube constant Q(mu)
    log_phi = 2.0 * math.log(rho_bar) + log_lam - log_gamma
    log_Q = log_tube_Q(LOG_Q_MU, log_phi)

    # Step 2: Gamma and c*
    min_v = min(spec.V0, 1.0)
    Gamma = max(1.0, 2.0 * (consts.c ** 2 + consts.L) / (min_v * consts.lam))
    log_Gamma_T = max(
        0.0,
        math.log(2.0) + np.logaddexp(2.0 * math.log(consts.c), consts.log_L_T)
        - math.log(min_v) - 2.0 * math.log(rho_bar) - log_lam,
    )
    if c_star is not None:
        if c_star < 1.0:
            raise DomainError(f"c* must be >= 1, got {c_star}")
        log_c_star = math.log(c_star)
        source = "override"
    else:
        log_raw = (
            math.log(4.0) + math.log(20.0 * spec.V0 + 1.0) + math.log(Gamma)
            + 2.0 * log_gamma + LOG_Q_MU - 2.0 * log_lam
            + math.log(log_gamma + LOG_Q_MU - log_lam)
        )
        log_c_star = max(math.log(floor), log_raw)
        source = "constructed"

    # Step 3: time constants
    c_T, d_T, e_T = _time_constants(log_c_star, spec.T)

    # Step 4: short-interval constants
    epsilon0, delta0, q_sup = epsilon_delta_q(spec)

    h = None
    if y is not None:
        h = regularity_window(spec.V0, abs(y) + spec.V0, spec.T)

    return replace(
        consts,
        log_phi=log_phi,
        log_Q=log_Q,
        Gamma=Gamma,
        log_Gamma_T=float(log_Gamma_T),
        log_c_star=log_c_star,
        c_star_source=source,
        h=h,
        c_T=c_T,
        d_T=d_T,
        e_T=e_T,
        epsilon0=epsilon0,
        delta0=delta0,
        q_sup=q_sup,
    )


# -----------------------------
# Short-interval constants
# -----------------------------


def brownian_sup_probability(a: float, horizon: float = 1.0) -> float:
    """
    P(sup_{u <= horizon} |b_u| <= a) for a standard Brownian motion b.

    Reflection series for a/sqrt(horizon) >= 1, eigenfunction series below;
    both truncated once terms drop under 1e-12.
    """
    if a <= 0:
        return 0.0
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    if math.isinf(a):
        return 1.0
    z = a / math.sqrt(horizon)

    if z >= 1.0:
        # sum_k (-1)^k [Phi((2k+1) z) - Phi((2k-1) z)]
        total = special.ndtr(z) - special.ndtr(-z)
        k = 1
        while True:
            term = (
                special.ndtr((2 * k + 1) * z) - special.ndtr((2 * k - 1) * z)
                + special.ndtr((-2 * k + 1) * z) - special.ndtr((-2 * k - 1) * z)
            )
            total += (-1) ** k * term
            if abs(term) < SERIES_TOLERANCE:
                break
            k += 1
        return float(min(max(total, 0.0), 1.0))

    # (4/pi) sum_k (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 z^2))
    total = 0.0
    k = 0
    while True:
        term = math.exp(-((2 * k + 1) ** 2) * math.pi ** 2 / (8.0 * z * z)) / (2 * k + 1)
        total += (-1) ** k * term
        if term < SERIES_TOLERANCE * max(abs(total), 1e-300) or term == 0.0:
            break
        k += 1
    return float(min(max(4.0 / math.pi * total, 0.0), 1.0))


def epsilon_delta_q(spec: ModelSpec) -> Tuple[float, float, float]:
    """
    (eps0, delta0, q) of the short-interval increment estimate:

        eps0  = min(rho_bar eta_lo sigma_lo / (4 sqrt2 |rho| eta_hi), 1), 1 if rho = 0
        q     = P(sup_{u <= 1} |b_u| <= eps0 / (4 sqrt2 sigma_hi))
        delta0 = min(eps0^2 q / (160 K^2), T/2)
    """
    if spec.rho == 0.0:
        epsilon0 = 1.0
    else:
        epsilon0 = min(
            spec.rho_bar * spec.eta_lo * spec.sigma_lo / (4.0 * math.sqrt(2.0) * abs(spec.rho) * spec.eta_hi),
            1.0,
        )
    q_sup = brownian_sup_probability(epsilon0 / (4.0 * math.sqrt(2.0) * spec.sigma_hi))
    delta0 = min(epsilon0 ** 2 * q_sup / (160.0 * spec.K ** 2), spec.T / 2.0)
    return epsilon0, delta0, q_sup


# -----------------------------
# Density constants
# -----------------------------


@dataclass(frozen=True)
class DensityConstants:
    e_T: LogMagnitude
    log_m_T: Optional[float]
    m_T_note: str
    placeholders: Optional[Dict[str, float]] = None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "e_T": self.e_T.as_dict(),
            "log_m_T": self.log_m_T,
            "m_T_note": self.m_T_note,
            "placeholders": self.placeholders,
        }


M_T_NOTE = (
    "M_T depends on universal constants of the Malliavin density estimate "
    "(C*, l*, c_p, p) that are not numerically available; it is only "
    "evaluated under user-supplied placeholders."
)

PLACEHOLDER_NAMES = ("C_star", "l_star", "c_p", "p")


def log_m_T(spec: ModelSpec, consts: BoundConstants, placeholders: Optional[Dict[str, float]]) -> float:
    """
    log M_T with M_T = 2 / (eps0 rho_bar eta_lo sqrt(delta0) Theta_T) and

        Theta_T = rho_bar eta_lo^2 2^{-l* - 5/2} / (sqrt(pi) e eta_hi C* c_p) e^{-2 c_p T^p}
    """
    missing = [name for name in PLACEHOLDER_NAMES if not placeholders or placeholders.get(name) is None]
    if missing:
        raise NotComputableError(f"M_T is not computable without placeholders for {missing}. {M_T_NOTE}")

    C_star = float(placeholders["C_star"])
    l_star = float(placeholders["l_star"])
    c_p = float(placeholders["c_p"])
    p = float(placeholders["p"])
    if C_star <= 0 or c_p <= 0:
        raise DomainError("C_star and c_p must be positive")

    rho_bar = spec.rho_bar
    log_theta = (
        math.log(rho_bar) + 2.0 * math.log(spec.eta_lo) - (l_star + 2.5) * math.log(2.0)
        - 0.5 * math.log(math.pi) - 1.0 - math.log(spec.eta_hi) - math.log(C_star) - math.log(c_p)
        - 2.0 * c_p * spec.T ** p
    )
    return (
        math.log(2.0) - math.log(consts.epsilon0) - math.log(rho_bar) - math.log(spec.eta_lo)
        - 0.5 * math.log(consts.delta0) - log_theta
    )


def density_constants(
    spec: ModelSpec,
    consts: Optional[BoundConstants] = None,
    placeholders: Optional[Dict[str, float]] = None,
    *,
    want_m_T: bool = False,
) -> DensityConstants:
    """
    e_T = 136 c* (1/T^2 + 1) e^{(c* + 1) T}. M_T only when placeholders are given;
    ``want_m_T`` without them raises NotComputableError.
    """
    if consts is None or consts.e_T is None:
        consts = bound_constants(spec)
    log_m = None
    if placeholders or want_m_T:
        log_m = log_m_T(spec, consts, placeholders)
    return DensityConstants(e_T=consts.e_T, log_m_T=log_m, m_T_note=M_T_NOTE, placeholders=placeholders)


# -----------------------------
# Ellipticity audit
# -----------------------------


@dataclass(frozen=True)
class EllipticityReport:
    draws: int
    lower_violations: int
    upper_violations: int
    min_lower_ratio: float
    max_upper_ratio: float

    @property
    def passed(self) -> bool:
        return self.lower_violations == 0 and self.upper_violations == 0

    def as_dict(self) -> Dict[str, Any]:
        return {
            "draws": self.draws,
            "lower_violations": self.lower_violations,
            "upper_violations": self.upper_violations,
            "min_lower_ratio": self.min_lower_ratio,
            "max_upper_ratio": self.max_upper_ratio,
            "passed": self.passed,
        }


def ellipticity_report(
    spec: ModelSpec,
    consts: Optional[BoundConstants] = None,
    draws: int = 100_000,
    seed: int = 0,
) -> EllipticityReport:
    """
    Exact eigenvalues of sigma sigma* on random (t, x, v) draws against the
    envelope [rho_bar^2 lambda v, gamma v].

    ``min_lower_ratio`` is min(lambda_min / (rho_bar^2 lambda v)) and
    ``max_upper_ratio`` is max(lambda_max / (gamma v)).
    """
    if consts is None:
        consts = tech_constants(spec)
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, spec.T, draws)
    x = rng.uniform(-10.0, 10.0, draws)
    v = rng.uniform(0.0, 100.0 * spec.V0, draws)
    v[v == 0.0] = spec.V0

    low, high = sigma_sigma_star_eigenvalues(spec, t, x, v)
    floor = spec.rho_bar ** 2 * consts.lam * v
    ceiling = consts.gamma * v
    lower_ratio = low / floor
    upper_ratio = high / ceiling
    return EllipticityReport(
        draws=draws,
        lower_violations=int(np.count_nonzero(lower_ratio < 1.0 - 1e-12)),
        upper_violations=int(np.count_nonzero(upper_ratio > 1.0 + 1e-12)),
        min_lower_ratio=float(lower_ratio.min()),
        max_upper_ratio=float(upper_ratio.max()),
    )
