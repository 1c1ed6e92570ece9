"""
Log-domain magnitudes
Bound exponents grow like c* e^{c* T^2} with c* of order e^190, so even their
logarithms lose the small terms that decide monotonicity. A LogMagnitude M
is stored as

    log M = exp(log_tower) + log_rest

with log_tower = -inf for ordinary numbers. Constants sharing a tower
(c_T and d_T) compare and add exactly through their rests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Any, Dict

NO_TOWER = -math.inf


def _exp_or_inf(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@total_ordering
@dataclass(frozen=True)
class LogMagnitude:
    """
    Positive magnitude M with log M = exp(log_tower) + log_rest.
    The probability bound it stands for is exp(-M).
    """

    log_tower: float = NO_TOWER
    log_rest: float = 0.0

    @classmethod
    def from_log(cls, log_value: float) -> "LogMagnitude":
        return cls(NO_TOWER, float(log_value))

    @classmethod
    def from_value(cls, value: float) -> "LogMagnitude":
        if value <= 0:
            raise ValueError(f"LogMagnitude needs a positive value, got {value}")
        return cls.from_log(math.log(value))

    @property
    def has_tower(self) -> bool:
        return self.log_tower != NO_TOWER

    @property
    def log_value(self) -> float:
        """log M (may be +inf once the tower overflows)."""
        return _exp_or_inf(self.log_tower) + self.log_rest

    @property
    def value(self) -> float:
        return _exp_or_inf(self.log_value)

    @property
    def log_probability(self) -> float:
        """log of the bound exp(-M): simply -M, possibly -inf."""
        return -self.value

    def scaled(self, log_factor: float) -> "LogMagnitude":
        """M * exp(log_factor)."""
        return LogMagnitude(self.log_tower, self.log_rest + log_factor)

    def times(self, factor: float) -> "LogMagnitude":
        if factor <= 0:
            raise ValueError(f"factor must be > 0, got {factor}")
        return self.scaled(math.log(factor))

    # -----------------------------
    # Comparison
    # -----------------------------

    def _log_gap(self, other: "LogMagnitude") -> float:
        """
        log M_self - log M_other, computed without forming either tower when
        both are shared; +/-inf when the towers are too far apart.
        """
        if self.log_tower == other.log_tower:
            return self.log_rest - other.log_rest
        if self.log_tower > other.log_tower:
            hi, lo, sign = self, other, 1.0
        else:
            hi, lo, sign = other, self, -1.0
        # exp(t_hi) - exp(t_lo) = exp(t_hi) * (-expm1(t_lo - t_hi))
        tower_gap = _exp_or_inf(hi.log_tower + math.log(-math.expm1(lo.log_tower - hi.log_tower)))
        return sign * (tower_gap + (hi.log_rest - lo.log_rest))

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, LogMagnitude):
            return NotImplemented
        return self._log_gap(other) == 0.0

    def __lt__(self, other: "LogMagnitude") -> bool:
        if not isinstance(other, LogMagnitude):
            return NotImplemented
        return self._log_gap(other) < 0.0

    def __hash__(self) -> int:
        return hash((self.log_tower, self.log_rest))

    def log_ratio(self, other: "LogMagnitude") -> float:
        """log(M_self / M_other)."""
        return self._log_gap(other)

    # -----------------------------
    # Arithmetic
    # -----------------------------

    def __add__(self, other: "LogMagnitude") -> "LogMagnitude":
        if not isinstance(other, LogMagnitude):
            return NotImplemented
        if self.log_tower == other.log_tower:
            hi_rest = max(self.log_rest, other.log_rest)
            lo_rest = min(self.log_rest, other.log_rest)
            return LogMagnitude(self.log_tower, hi_rest + math.log1p(math.exp(lo_rest - hi_rest)))
        hi, lo = (self, other) if self >= other else (other, self)
        gap = lo._log_gap(hi)
        return hi.scaled(math.log1p(math.exp(gap)) if gap > -745.0 else 0.0)

    def as_dict(self) -> Dict[str, float]:
        return {
            "log_tower": self.log_tower,
            "log_rest": self.log_rest,
            "log_value": self.log_value,
        }


def total(*terms: LogMagnitude) -> LogMagnitude:
    """Sum of magnitudes."""
    if not terms:
        raise ValueError("total() needs at least one term")
    acc = terms[0]
    for term in terms[1:]:
        acc = acc + term
    return acc
