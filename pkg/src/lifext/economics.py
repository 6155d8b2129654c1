"""Revenue of a life-extension vendor and its dependence on the unit price E."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import SocietyParams
from .population import WealthEnsemble, simulate

__all__ = ["ProfitCurve", "generation_profit", "cumulative_profits", "profit_sweep", "profit_argmax", "e_grid"]


@dataclass(frozen=True)
class ProfitCurve:
    e_values: np.ndarray
    slices: tuple[int, ...]
    profit_by_slice: dict[int, np.ndarray]
    argmax_by_slice: dict[int, float]


def generation_profit(ensemble: WealthEnsemble, params: SocietyParams) -> float:
    """E times the number of individuals buying an extension this generation.

    Manufacturing cost is taken as zero, so profit is revenue.
    """
    if params.extension_cost is None:
        raise ValueError("generation_profit requires extension_cost")
    e = params.extension_cost
    buyers = params.gamma * ensemble.wealth >= e
    return e * float(ensemble.weight[buyers].sum())


def cumulative_profits(params: SocietyParams, initial: WealthEnsemble, slices: Sequence[int]) -> list[float]:
    """Profit summed over the first ``t`` generations, for each ``t`` in ``slices``."""
    horizon = max(slices)
    records = simulate(params, initial, horizon, n_bins=None)
    # record t holds purchases made while moving from t to t+1
    running = np.cumsum([r.profit for r in records[:horizon]])
    return [float(running[t - 1]) if t > 0 else 0.0 for t in slices]


def _sweep_one(args):
    base, e, initial, slices = args
    return cumulative_profits(base.with_extension(e), initial, slices)


def e_grid(e_min: float, e_max: float, e_step: float) -> np.ndarray:
    """Inclusive arithmetic grid, rounded so values print cleanly."""
    if not e_step > 0:
        raise ValueError(f"e_step must be > 0, got {e_step}")
    if not e_min > 0 or e_max < e_min:
        raise ValueError("need 0 < e_min <= e_max")
    n = int(np.floor((e_max - e_min) / e_step + 1e-9)) + 1
    return np.round(e_min + e_step * np.arange(n), 10)


def profit_sweep(
    base: SocietyParams,
    e_values: Sequence[float],
    initial: WealthEnsemble,
    slices: Sequence[int] = (1, 2, 4),
    workers: int = 1,
) -> ProfitCurve:
    """Cumulative profit at each time slice for every price in ``e_values``.

    ``base.extension_cost`` is ignored.  Prices are independent, so with
    ``workers > 1`` they run in separate processes; results keep grid order.
    """
    e_arr = np.asarray(e_values, dtype=float)
    slices = tuple(int(s) for s in slices)
    if e_arr.ndim != 1 or e_arr.size == 0:
        raise ValueError("e_values must be a non-empty 1-d sequence")
    if np.any(np.diff(e_arr) <= 0):
        raise ValueError("e_values must be strictly ascending")
    if not slices or any(s < 1 for s in slices) or list(slices) != sorted(set(slices)):
        raise ValueError("slices must be strictly ascending integers >= 1")
    jobs = [(base, float(e), initial, slices) for e in e_arr]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    table = np.array(rows)
    by_slice = {s: table[:, i] for i, s in enumerate(slices)}
    curve = ProfitCurve(e_arr, slices, by_slice, {})
    for s in slices:
        curve.argmax_by_slice[s] = profit_argmax(curve, s)
    return curve


def profit_argmax(curve: ProfitCurve, slice: int) -> float:
    """Grid price with the largest cumulative profit; ties go to the smaller E."""
    if slice not in curve.profit_by_slice:
        raise KeyError(f"slice {slice} not in curve (have {sorted(curve.profit_by_slice)})")
    # np.argmax returns the first maximum, i.e. the smallest E
    return float(curve.e_values[int(np.argmax(curve.profit_by_slice[slice]))])
