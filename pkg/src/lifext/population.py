"""Weighted wealth ensembles and their generation-by-generation evolution.

An ensemble is a set of wealth points, each carrying a weight equal to the
expected number of individuals at that wealth.  Because the step map is
deterministic and children share their parents' ``m'``, every point maps to
at most one point, so the evolution is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import SocietyParams, critical_wealths, step, tfloor

__all__ = [
    "WealthEnsemble",
    "Histogram",
    "GenerationRecord",
    "MERGE_RTOL",
    "PRUNE_FRACTION",
    "PRUNE_BUDGET",
    "init_gaussian",
    "point_mass",
    "from_points",
    "evolve_generation",
    "simulate",
    "simulate_ensembles",
    "fertility_rate",
    "asymptotic_fertility",
    "histogram",
    "count_modes",
    "regime_fractions",
]

MERGE_RTOL = 1e-9
PRUNE_FRACTION = 1e-12
PRUNE_BUDGET = 1e-9


@dataclass(frozen=True)
class WealthEnsemble:
    wealth: np.ndarray
    weight: np.ndarray
    generation: int = 0

    def __post_init__(self) -> None:
        w = np.asarray(self.wealth, dtype=float)
        p = np.asarray(self.weight, dtype=float)
        if w.ndim != 1 or w.shape != p.shape:
            raise ValueError("wealth and weight must be 1-d arrays of equal length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("wealth values must be finite and >= 0")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("weights must be finite and >= 0")
        object.__setattr__(self, "wealth", w)
        object.__setattr__(self, "weight", p)

    @property
    def population(self) -> float:
        return float(self.weight.sum())

    @property
    def extinct(self) -> bool:
        return self.population == 0.0

    def __len__(self) -> int:
        return self.wealth.size


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    bin_weights: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


@dataclass
class GenerationRecord:
    t: int
    population: float
    fertility: float
    mean_wealth: float
    frac_below_mstar: float
    frac_mortal_fertile: float
    frac_barrier: float
    frac_immortal: float
    profit: float
    histogram: Optional[Histogram] = field(default=None, repr=False)


def init_gaussian(
    mean: float, sigma: float, n_points: int = 1001, truncate_below: float = 0.0
) -> WealthEnsemble:
    """Midpoint-quadrature discretization of a (truncated) Gaussian.

    Support is ``[max(truncate_below, mean - 5 sigma), mean + 5 sigma]``,
    split into ``n_points`` equal cells; total weight is normalized to 1.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    lo = max(truncate_below, mean - 5 * sigma)
    hi = mean + 5 * sigma
    if not hi > lo:
        raise ValueError("empty support after truncation")
    h = (hi - lo) / n_points
    x = lo + h * (np.arange(n_points) + 0.5)
    dens = np.exp(-0.5 * ((x - mean) / sigma) ** 2)
    return WealthEnsemble(x, dens / dens.sum())


def point_mass(wealth: float, weight: float = 1.0) -> WealthEnsemble:
    return WealthEnsemble(np.array([wealth]), np.array([weight]))


def from_points(points: Iterable[Sequence[float]]) -> WealthEnsemble:
    pts = [tuple(p) for p in points]
    if not pts:
        raise ValueError("at least one (wealth, weight) point is required")
    w, p = zip(*pts)
    return WealthEnsemble(np.array(w, dtype=float), np.array(p, dtype=float))


def _k_of(m: np.ndarray, params: SocietyParams) -> np.ndarray:
    return np.array([step(float(x), params).k for x in m], dtype=float)


def regime_fractions(ensemble: WealthEnsemble, params: SocietyParams) -> tuple[float, float, float, float]:
    """Weight fractions in [0,m*), [m*,m1), [m1,m2), [m2,inf)."""
    total = ensemble.population
    if total == 0:
        return (0.0, 0.0, 0.0, 0.0)
    cw = critical_wealths(params)
    m, w = ensemble.wealth, ensemble.weight
    m1 = math.inf if cw.m1 is None else cw.m1
    m2 = math.inf if cw.m2 is None else cw.m2
    immortal = m >= m2
    barrier = (m >= m1) & ~immortal
    fertile = (m >= cw.m_star) & (m < m1)
    below = ~(immortal | barrier | fertile)
    return tuple(float(w[mask].sum() / total) for mask in (below, fertile, barrier, immortal))


def fertility_rate(ensemble: WealthEnsemble, params: SocietyParams) -> float:
    """Population-weighted mean number of children per pair."""
    total = ensemble.population
    if total == 0:
        raise ValueError("fertility of an extinct ensemble is undefined")
    return float(np.dot(ensemble.weight, _k_of(ensemble.wealth, params)) / total)


def asymptotic_fertility(params: SocietyParams) -> int:
    """Mortal fertility ceiling floor(2(gamma - alpha)) for m >> C."""
    return tfloor(2 * (params.gamma - params.alpha))


def histogram(
    ensemble: WealthEnsemble,
    n_bins: int,
    range: Optional[tuple[float, float]] = None,
) -> Histogram:
    """Linear-bin histogram of ensemble weight.

    Weight outside ``range`` is accumulated into the first/last bin.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if range is None:
        if len(ensemble) == 0:
            raise ValueError("degenerate histogram range: empty ensemble")
        lo, hi = float(ensemble.wealth.min()), float(ensemble.wealth.max())
    else:
        lo, hi = float(range[0]), float(range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
        raise ValueError(f"degenerate histogram range ({lo}, {hi})")
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.floor((ensemble.wealth - lo) / (hi - lo) * n_bins).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    weights = np.bincount(idx, weights=ensemble.weight, minlength=n_bins)
    return Histogram(edges, weights)


def _smooth(y: np.ndarray, window: int) -> np.ndarray:
    if window == 1:
        return y.astype(float)
    kernel = np.ones(window)
    s = np.convolve(y, kernel, mode="same")
    n = np.convolve(np.ones_like(y, dtype=float), kernel, mode="same")
    return s / n


def count_modes(hist: Histogram, smooth_window: int = 3, prominence: float = 0.05) -> int:
    """Count well-separated peaks of the smoothed bin weights.

    A local maximum counts if it reaches ``prominence`` times the global
    maximum and, against every higher counted peak, the smoothed curve dips
    below half its own height somewhere in between.
    """
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ValueError("smooth_window must be an odd integer >= 1")
    if not 0 < prominence < 1:
        raise ValueError("prominence must lie in (0, 1)")
    y = _smooth(np.asarray(hist.bin_weights, dtype=float), smooth_window)
    if y.size == 0 or y.max() <= 0:
        return 0
    # Plateau-aware local maxima: one representative per flat top.
    peaks = []
    i, n = 0, y.size
    while i < n:
        j = i
        while j + 1 < n and y[j + 1] == y[i]:
            j += 1
        left_ok = i == 0 or y[i - 1] < y[i]
        right_ok = j == n - 1 or y[j + 1] < y[i]
        if left_ok and right_ok and y[i] > 0:
            peaks.append((i + j) // 2)
        i = j + 1
    floor_h = prominence * y.max()
    peaks = [p for p in peaks if y[p] >= floor_h]
    peaks.sort(key=lambda p: (-y[p], p))
    kept: list[int] = []
    for p in peaks:
        separated = True
        for q in kept:
            a, b = sorted((p, q))
            if y[a : b + 1].min() >= 0.5 * y[p]:
                separated = False
                break
        if separated:
            kept.append(p)
    return len(kept)


def _merge_and_prune(
    wealth: np.ndarray, weight: np.ndarray, prune_budget: float = PRUNE_BUDGET
) -> tuple[np.ndarray, np.ndarray]:
    if wealth.size == 0:
        return wealth, weight
    order = np.argsort(wealth, kind="stable")
    wealth, weight = wealth[order], weight[order]
    out_m: list[float] = []
    out_w: list[float] = []
    acc_m = wealth[0] * weight[0]
    acc_w = weight[0]
    anchor = wealth[0]
    for m, w in zip(wealth[1:], weight[1:]):
        if m - anchor <= MERGE_RTOL * max(1.0, m):
            acc_m += m * w
            acc_w += w
        else:
            out_m.append(acc_m / acc_w if acc_w > 0 else anchor)
            out_w.append(acc_w)
            acc_m, acc_w, anchor = m * w, w, m
    out_m.append(acc_m / acc_w if acc_w > 0 else anchor)
    out_w.append(acc_w)
    m_arr, w_arr = np.array(out_m), np.array(out_w)

    total = w_arr.sum()
    if total == 0:
        return m_arr[:0], w_arr[:0]
    # Drop negligible points, lightest first, without exceeding the budget.
    small = np.nonzero(w_arr < PRUNE_FRACTION * total)[0]
    if small.size:
        small = small[np.argsort(w_arr[small], kind="stable")]
        within = np.cumsum(w_arr[small]) <= prune_budget * total
        drop = np.zeros(w_arr.size, dtype=bool)
        drop[small[within]] = True
        m_arr, w_arr = m_arr[~drop], w_arr[~drop]
    return m_arr, w_arr


def _record(
    ensemble: WealthEnsemble,
    params: SocietyParams,
    n_bins: Optional[int],
    hist_range: Optional[tuple[float, float]],
) -> GenerationRecord:
    pop = ensemble.population
    if pop == 0:
        return GenerationRecord(ensemble.generation, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    fracs = regime_fractions(ensemble, params)
    profit = 0.0
    if params.extension_cost is not None:
        buyers = params.gamma * ensemble.wealth >= params.extension_cost
        profit = params.extension_cost * float(ensemble.weight[buyers].sum())
    hist = None
    if n_bins is not None:
        rng = hist_range
        if rng is None and ensemble.wealth.min() == ensemble.wealth.max():
            m0 = float(ensemble.wealth[0])
            rng = (m0 - 0.5, m0 + 0.5)
        hist = histogram(ensemble, n_bins, rng)
    return GenerationRecord(
        t=ensemble.generation,
        population=pop,
        fertility=fertility_rate(ensemble, params),
        mean_wealth=float(np.dot(ensemble.weight, ensemble.wealth) / pop),
        frac_below_mstar=fracs[0],
        frac_mortal_fertile=fracs[1],
        frac_barrier=fracs[2],
        frac_immortal=fracs[3],
        profit=profit,
        histogram=hist,
    )


def _transition(ensemble: WealthEnsemble, params: SocietyParams) -> WealthEnsemble:
    new_m: list[float] = []
    new_w: list[float] = []
    for m, w in zip(ensemble.wealth, ensemble.weight):
        out = step(float(m), params)
        # Weights count individuals; each pair's k children split over two parents.
        factor = 1.0 + out.k / 2 if out.extended else out.k / 2
        if factor > 0:
            new_m.append(out.m_prime)
            new_w.append(w * factor)
    return WealthEnsemble(np.array(new_m), np.array(new_w), ensemble.generation + 1)


def evolve_generation(
    ensemble: WealthEnsemble,
    params: SocietyParams,
    n_bins: Optional[int] = None,
    hist_range: Optional[tuple[float, float]] = None,
) -> tuple[WealthEnsemble, GenerationRecord]:
    """Advance one generation.

    Returns the next ensemble (unmerged) and the record of observables
    measured on the input ensemble.
    """
    return _transition(ensemble, params), _record(ensemble, params, n_bins, hist_range)


def simulate_ensembles(
    params: SocietyParams,
    initial: WealthEnsemble,
    generations: int,
    prune_budget: float = PRUNE_BUDGET,
) -> list[WealthEnsemble]:
    """Ensembles for t = 0..generations, merged and pruned after each step."""
    if generations < 1:
        raise ValueError(f"generations must be >= 1, got {generations}")
    out = [initial]
    ens = initial
    for _ in range(generations):
        nxt = _transition(ens, params)
        m, w = _merge_and_prune(nxt.wealth, nxt.weight, prune_budget)
        ens = WealthEnsemble(m, w, nxt.generation)
        out.append(ens)
    return out


def simulate(
    params: SocietyParams,
    initial: WealthEnsemble,
    generations: int,
    n_bins: Optional[int] = 50,
    hist_range: Optional[tuple[float, float]] = None,
    prune_budget: float = PRUNE_BUDGET,
) -> list[GenerationRecord]:
    """Evolve ``initial`` and return records for t = 0..generations."""
    ensembles = simulate_ensembles(params, initial, generations, prune_budget)
    return [_record(e, params, n_bins, hist_range) for e in ensembles]
