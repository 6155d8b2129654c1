"""Single-generation dynamics of the wealth/fertility/life-extension model.

A pair of adults, each holding wealth ``m``, grows its joint capital to
``2*gamma*m`` and spends it on ``k`` children (cost ``C`` plus inheritance
``m'`` each) and either pensions (``alpha*m`` each) or, when affordable, life
extension (``E`` each, after which both adults restart with ``m'``).  The
number of children is the largest integer keeping ``m' >= m``.

``step`` evaluates the closed-form solution; ``oracle_step`` enumerates
candidate child counts directly and is kept deliberately independent of it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "FLOOR_EPS",
    "SocietyParams",
    "CriticalWealths",
    "StepOutcome",
    "critical_wealths",
    "basic_step",
    "extended_step",
    "step",
    "oracle_step",
    "regime",
    "tfloor",
]

# Slack added before flooring so analytically exact integers are not split by
# rounding (dynamics are discontinuous at integer arguments).
FLOOR_EPS = 1e-12


def tfloor(x: float) -> int:
    """Floor with a small upward tolerance."""
    return math.floor(x + FLOOR_EPS)


@dataclass(frozen=True)
class SocietyParams:
    """Exogenous constants of a society.

    ``extension_cost=None`` selects the model without life extension.
    """

    gamma: float
    alpha: float
    child_cost: float
    extension_cost: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("gamma", "alpha", "child_cost"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite number, got {v!r}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.child_cost <= 0:
            raise ValueError(f"child_cost must be > 0, got {self.child_cost}")
        if self.extension_cost is not None:
            e = self.extension_cost
            if not isinstance(e, (int, float)) or not math.isfinite(e) or e <= 0:
                raise ValueError(f"extension_cost must be > 0 when given, got {e!r}")
        if 2 * self.gamma - 2 * self.alpha - 1 <= 0:
            warnings.warn(
                "2*gamma - 2*alpha - 1 <= 0: no wealth level reproduces (m* is infinite)",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def has_extension(self) -> bool:
        return self.extension_cost is not None

    def without_extension(self) -> "SocietyParams":
        return SocietyParams(self.gamma, self.alpha, self.child_cost, None)

    def with_extension(self, extension_cost: float) -> "SocietyParams":
        return SocietyParams(self.gamma, self.alpha, self.child_cost, extension_cost)


@dataclass(frozen=True)
class CriticalWealths:
    m_star: float
    m1: Optional[float] = None
    m2: Optional[float] = None


@dataclass(frozen=True)
class StepOutcome:
    k: int
    m_prime: float
    extended: bool
    pension_per_adult: float


def critical_wealths(params: SocietyParams) -> CriticalWealths:
    """Reproduction threshold m*, extension threshold m1, immortality threshold m2."""
    denom = 2 * params.gamma - 2 * params.alpha - 1
    m_star = params.child_cost / denom if denom > 0 else math.inf
    if params.extension_cost is None:
        return CriticalWealths(m_star)
    e = params.extension_cost
    m1 = e / params.gamma
    m2 = e / (params.gamma - 1) if params.gamma > 1 else math.inf
    return CriticalWealths(m_star, m1, m2)


def _check_wealth(m: float) -> None:
    if not (m >= 0) or not math.isfinite(m):
        raise ValueError(f"wealth must be finite and >= 0, got {m!r}")


def basic_step(m: float, params: SocietyParams) -> StepOutcome:
    """One generation without life extension (E is ignored)."""
    _check_wealth(m)
    g, a, c = params.gamma, params.alpha, params.child_cost
    pension = a * m
    # K1 >= 1 is equivalent to m >= m*; using it directly keeps both
    # conditions consistent at the threshold.
    k = tfloor(2 * m * (g - a) / (c + m)) if m > 0 else 0
    if k < 1:
        return StepOutcome(0, 0.0, False, pension)
    return StepOutcome(k, 2 * m * (g - a) / k - c, False, pension)


def extended_step(m: float, params: SocietyParams) -> StepOutcome:
    """One generation with life extension available.

    Pairs below ``m1`` follow :func:`basic_step`.  Inside the barrier
    ``[m1, m2)`` the child count is clamped at zero and wealth declines as
    ``gamma*m - E``.
    """
    if params.extension_cost is None:
        raise ValueError("extended_step requires extension_cost; use step() or basic_step()")
    _check_wealth(m)
    g, c, e = params.gamma, params.child_cost, params.extension_cost
    if g * m < e:
        return basic_step(m, params)
    k = max(0, tfloor((2 * g * m - 2 * e - 2 * m) / (c + m)))
    m_prime = (2 * g * m - 2 * e - k * c) / (k + 2)
    return StepOutcome(k, m_prime, True, 0.0)


def step(m: float, params: SocietyParams) -> StepOutcome:
    if params.extension_cost is None:
        return basic_step(m, params)
    return extended_step(m, params)


def oracle_step(m: float, params: SocietyParams) -> StepOutcome:
    """Brute-force step: enumerate every child count the budget allows.

    For each candidate ``k`` in ``0..floor(2*gamma*m/C)`` the budget identity
    is solved for ``m'`` and the largest ``k`` with ``m' >= m`` wins.
    """
    _check_wealth(m)
    g, a, c, e = params.gamma, params.alpha, params.child_cost, params.extension_cost
    budget = 2 * g * m
    extended = e is not None and budget >= 2 * e
    kmax = int(budget // c)
    ks = np.arange(1, kmax + 1, dtype=float)
    if extended:
        # 2E + kC + (k+2) m' = 2 gamma m
        m_primes = (budget - 2 * e - ks * c) / (ks + 2)
    else:
        # kC + k m' + 2 alpha m = 2 gamma m
        m_primes = (budget - 2 * a * m - ks * c) / ks
    ok = np.nonzero(m_primes >= m - FLOOR_EPS * max(1.0, m))[0]
    if ok.size:
        i = ok[-1]
        k = int(ks[i])
        if extended:
            return StepOutcome(k, float(m_primes[i]), True, 0.0)
        return StepOutcome(k, float(m_primes[i]), False, a * m)
    if extended:
        return StepOutcome(0, budget / 2 - e, True, 0.0)
    return StepOutcome(0, 0.0, False, a * m)


def regime(m: float, cw: CriticalWealths) -> str:
    """Label of the wealth regime containing ``m``.

    One of ``below_mstar``, ``mortal_fertile``, ``barrier``, ``immortal``.
    """
    if cw.m2 is not None and m >= cw.m2:
        return "immortal"
    if cw.m1 is not None and m >= cw.m1:
        return "barrier"
    if m >= cw.m_star:
        return "mortal_fertile"
    return "below_mstar"
