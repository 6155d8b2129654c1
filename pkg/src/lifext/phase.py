"""Where in (gamma, E/C) space mortal lineages can tunnel into immortality.

A lineage sitting just below the extension threshold ``m1`` tunnels when its
children inherit at least the immortality threshold ``m2``.  The regions where
this is possible form islands indexed by the number of children ``n`` at
that wealth; island ``n`` opens at ``gamma_n(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import FLOOR_EPS, SocietyParams, critical_wealths, step

__all__ = [
    "PhasePoint",
    "IslandSpec",
    "PhaseGrid",
    "TUNNEL_EPS",
    "can_tunnel",
    "can_tunnel_threshold_form",
    "island_index",
    "island_boundaries",
    "gamma_n",
    "island_spec",
    "tunnel_check_dynamic",
    "phase_grid",
    "immortal_fertility_threshold",
]

# Relative offset standing in for the limit m -> m1 from below.
TUNNEL_EPS = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    gamma: float
    alpha: float
    e_over_c: float

    def __post_init__(self) -> None:
        if not self.e_over_c > 0:
            raise ValueError(f"e_over_c must be > 0, got {self.e_over_c}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")

    def society(self, child_cost: float = 1.0) -> SocietyParams:
        return SocietyParams(self.gamma, self.alpha, child_cost, self.e_over_c * child_cost)


@dataclass(frozen=True)
class IslandSpec:
    n: int
    gamma_start: float


@dataclass(frozen=True)
class PhaseGrid:
    gammas: np.ndarray
    e_over_cs: np.ndarray
    islands: np.ndarray  # shape (len(gammas), len(e_over_cs)); 0 = no island

    def rows(self):
        """Row-major (gamma, e_over_c, island or None) triples."""
        for i, g in enumerate(self.gammas):
            for j, r in enumerate(self.e_over_cs):
                n = int(self.islands[i, j])
                yield float(g), float(r), (n if n > 0 else None)


def _island_terms(gamma, alpha, r):
    """Outer and middle terms of the dimensionless tunneling inequality.

    Works elementwise on arrays.  ``outer >= floor(middle) >= 1`` (plus
    m* < m1) is the tunneling condition; ``floor(middle)`` is the island.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        num = 2 * r * (gamma - alpha)
        outer = num / (gamma + r * gamma / (gamma - 1))
        middle = num / (gamma + r)
    return outer, middle


def _eq5(gamma, alpha, r):
    gamma, alpha, r = np.broadcast_arrays(
        np.asarray(gamma, float), np.asarray(alpha, float), np.asarray(r, float)
    )
    outer, middle = _island_terms(gamma, alpha, r)
    n = np.floor(middle + FLOOR_EPS)
    denom = 2 * gamma - 2 * alpha - 1
    # m* < m1  <=>  C/(2g-2a-1) < E/g  <=>  g < r (2g-2a-1)
    below = (denom > 0) & (gamma < r * denom)
    ok = (gamma > 1) & (r > 0) & below & (n >= 1) & (outer + FLOOR_EPS >= n)
    return np.where(ok, n, 0).astype(np.int64)


def can_tunnel(p: PhasePoint) -> bool:
    return bool(_eq5(p.gamma, p.alpha, p.e_over_c) > 0)


def can_tunnel_threshold_form(params: SocietyParams) -> bool:
    """Tunneling test written in terms of m*, m1 and m2 directly.

    Requires ``m* < m1`` and, at ``m = m1``, the child inheritance bound
    ``2 m1 (gamma - alpha) / (C + m2) >= floor(2 m1 (gamma - alpha) / (C + m1))``.
    """
    if params.extension_cost is None or params.gamma <= 1:
        return False
    cw = critical_wealths(params)
    if not cw.m_star < cw.m1:
        return False
    g, a, c = params.gamma, params.alpha, params.child_cost
    lhs = 2 * cw.m1 * (g - a) / (c + cw.m2)
    k = math.floor(2 * cw.m1 * (g - a) / (c + cw.m1) + FLOOR_EPS)
    return k >= 1 and lhs + FLOOR_EPS >= k


def island_index(p: PhasePoint) -> Optional[int]:
    n = int(_eq5(p.gamma, p.alpha, p.e_over_c))
    return n if n > 0 else None


def gamma_n(n: int) -> float:
    """Growth factor at which island ``n`` opens."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return (1 + math.sqrt(1 + 2 * n * (n + 1))) / 2


def island_spec(n: int) -> IslandSpec:
    return IslandSpec(n, gamma_n(n))


def island_boundaries(n: int, gamma: float) -> Optional[tuple[float, float]]:
    """E/C interval of island ``n`` at growth ``gamma`` (alpha = 0 only).

    Returned as the closure ``(lo, hi)`` of the set where ``island_index``
    equals ``n``; membership itself is decided by the pointwise test.
    ``None`` when the island has not opened yet at this ``gamma``.
    """
    if n < 1:
        raise ValueError(f"island index must be >= 1, got {n}")
    d_hi = 2 * gamma - n - 1
    d_lo = 2 * gamma * (gamma - 1) - n * gamma
    if d_hi <= 0 or d_lo <= 0 or gamma < gamma_n(n):
        return None
    hi = (n + 1) * gamma / d_hi
    lo = n * gamma * (gamma - 1) / d_lo
    if lo > hi:
        # only reachable through rounding right at gamma_n
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


def tunnel_check_dynamic(params: SocietyParams) -> bool:
    """Run one generation from just below m1 and test whether m' reaches m2."""
    if params.extension_cost is None:
        raise ValueError("tunnel check requires extension_cost")
    if params.gamma <= 1:
        return False
    cw = critical_wealths(params)
    out = step(cw.m1 * (1 - TUNNEL_EPS), params)
    return out.k >= 1 and out.m_prime >= cw.m2


def phase_grid(
    gamma_range: tuple[float, float],
    e_over_c_range: tuple[float, float],
    alpha: float = 0.0,
    resolution: int | tuple[int, int] = 500,
) -> PhaseGrid:
    """Island index on an inclusive Cartesian grid (rows: gamma)."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    ng, nr = resolution
    if ng < 2 or nr < 2:
        raise ValueError("resolution must be >= 2 along each axis")
    if not gamma_range[1] > gamma_range[0] or not e_over_c_range[1] > e_over_c_range[0]:
        raise ValueError("ranges must be increasing")
    if gamma_range[0] <= 0 or e_over_c_range[0] < 0:
        raise ValueError("ranges must be positive")
    gammas = np.linspace(gamma_range[0], gamma_range[1], ng)
    ratios = np.linspace(e_over_c_range[0], e_over_c_range[1], nr)
    islands = _eq5(gammas[:, None], alpha, ratios[None, :])
    return PhaseGrid(gammas, ratios, islands)


def immortal_fertility_threshold(params: SocietyParams) -> Optional[float]:
    """Least wealth at which an extending pair can also afford a child."""
    if params.extension_cost is None:
        raise ValueError("immortal fertility threshold requires extension_cost")
    if params.gamma <= 1.5:
        return None
    return (params.child_cost + 2 * params.extension_cost) / (2 * params.gamma - 3)
