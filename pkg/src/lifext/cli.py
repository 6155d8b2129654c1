"""Command-line front end.

Subcommands: step, simulate, tunnel-check, phase-diagram, profit-sweep,
fertility-sweep.  Exit codes: 0 success, 1 invalid config or flags,
2 runtime or I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .dynamics import SocietyParams, basic_step, critical_wealths, regime, step
from .economics import e_grid, profit_sweep
from .phase import (
    PhasePoint,
    can_tunnel,
    gamma_n,
    island_boundaries,
    island_index,
    phase_grid,
    tunnel_check_dynamic,
)
from .population import (
    WealthEnsemble,
    count_modes,
    from_points,
    init_gaussian,
    point_mass,
    simulate,
)

DEFAULT_DUMPS = (0, 1, 2, 4, 8)
DEFAULT_BINS = 60


class ConfigError(ValueError):
    """Invalid configuration or flags (exit code 1)."""


def fmt(x: Any) -> str:
    """Locale-free number formatting: shortest round-trip repr for floats."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0.0"
    return repr(x)


def _json_num(x: Optional[float]):
    if x is None:
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- configuration -----------------------------------------------------------


def _num(section: dict, key: str, where: str, *, required: bool = True, default=None):
    if key not in section or section[key] is None:
        if required and default is None:
            raise ConfigError(f"{where}.{key}: required numeric field is missing")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: expected a finite number, got {v!r}")
    return v


def _int(section: dict, key: str, where: str, default=None, minimum: int = 1) -> int:
    v = section.get(key, default)
    if v is None:
        raise ConfigError(f"{where}.{key}: required integer field is missing")
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(f"{where}.{key}: must be >= {minimum}, got {v}")
    return v


def parse_society(section: Any) -> SocietyParams:
    if not isinstance(section, dict):
        raise ConfigError("society: expected an object")
    gamma = _num(section, "gamma", "society")
    alpha = _num(section, "alpha", "society")
    child_cost = _num(section, "child_cost", "society")
    ext = _num(section, "extension_cost", "society", required=False)
    if gamma <= 0:
        raise ConfigError(f"society.gamma: must be > 0, got {gamma}")
    if alpha < 0:
        raise ConfigError(f"society.alpha: must be >= 0, got {alpha}")
    if child_cost <= 0:
        raise ConfigError(f"society.child_cost: must be > 0, got {child_cost}")
    if ext is not None and ext <= 0:
        raise ConfigError(f"society.extension_cost: must be > 0 or null, got {ext}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return SocietyParams(float(gamma), float(alpha), float(child_cost), None if ext is None else float(ext))


def parse_initial(section: Any) -> WealthEnsemble:
    if not isinstance(section, dict):
        raise ConfigError("initial: expected an object")
    kind = section.get("kind", "gaussian")
    if kind == "gaussian":
        mean = _num(section, "mean", "initial")
        sigma = _num(section, "sigma", "initial")
        n_points = _int(section, "n_points", "initial", default=1001, minimum=2)
        trunc = _num(section, "truncate_below", "initial", required=False, default=0.0)
        if sigma <= 0:
            raise ConfigError(f"initial.sigma: must be > 0, got {sigma}")
        try:
            return init_gaussian(float(mean), float(sigma), n_points, float(trunc))
        except ValueError as exc:
            raise ConfigError(f"initial.truncate_below: {exc}") from exc
    if kind == "point":
        wealth = _num(section, "wealth", "initial")
        weight = _num(section, "weight", "initial", required=False, default=1.0)
        if wealth < 0:
            raise ConfigError(f"initial.wealth: must be >= 0, got {wealth}")
        if weight <= 0:
            raise ConfigError(f"initial.weight: must be > 0, got {weight}")
        return point_mass(float(wealth), float(weight))
    if kind == "points":
        pts = section.get("points")
        if not isinstance(pts, list) or not pts:
            raise ConfigError("initial.points: expected a non-empty list of [wealth, weight]")
        for i, p in enumerate(pts):
            ok = (
                isinstance(p, (list, tuple))
                and len(p) == 2
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in p)
            )
            if not ok or p[0] < 0 or p[1] < 0:
                raise ConfigError(f"initial.points[{i}]: expected [wealth >= 0, weight >= 0], got {p!r}")
        return from_points(pts)
    raise ConfigError(f"initial.kind: expected 'gaussian', 'point' or 'points', got {kind!r}")


def parse_run(section: Any) -> dict:
    section = {} if section is None else section
    if not isinstance(section, dict):
        raise ConfigError("run: expected an object")
    run = {
        "generations": _int(section, "generations", "run", default=8),
        "bins": _int(section, "bins", "run", default=DEFAULT_BINS),
        "smooth_window": _int(section, "smooth_window", "run", default=3),
        "prominence": _num(section, "prominence", "run", required=False, default=0.05),
        "hist_range": section.get("hist_range"),
        "dump": section.get("dump", list(DEFAULT_DUMPS)),
    }
    if run["smooth_window"] % 2 == 0:
        raise ConfigError(f"run.smooth_window: must be odd, got {run['smooth_window']}")
    if not 0 < run["prominence"] < 1:
        raise ConfigError(f"run.prominence: must lie in (0, 1), got {run['prominence']}")
    hr = run["hist_range"]
    if hr is not None:
        if not (isinstance(hr, list) and len(hr) == 2 and all(isinstance(v, (int, float)) for v in hr) and hr[1] > hr[0]):
            raise ConfigError(f"run.hist_range: expected [lo, hi] with hi > lo, got {hr!r}")
        run["hist_range"] = (float(hr[0]), float(hr[1]))
    dump = run["dump"]
    if not isinstance(dump, list) or not all(isinstance(t, int) and not isinstance(t, bool) and t >= 0 for t in dump):
        raise ConfigError(f"run.dump: expected a list of generation indices >= 0, got {dump!r}")
    return run


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    return doc


def _apply_society_flags(doc: dict, args) -> None:
    soc = doc.setdefault("society", {})
    if not isinstance(soc, dict):
        raise ConfigError("society: expected an object")
    for flag, key in (("gamma", "gamma"), ("alpha", "alpha"), ("child_cost", "child_cost"), ("extension_cost", "extension_cost")):
        v = getattr(args, flag, None)
        if v is not None:
            soc[key] = v
    if getattr(args, "no_extension", False):
        soc["extension_cost"] = None


# -- subcommands -------------------------------------------------------------


def cmd_step(args) -> int:
    params = parse_society(
        {"gamma": args.gamma, "alpha": args.alpha, "child_cost": args.child_cost, "extension_cost": args.extension_cost}
    )
    if args.m < 0 or not math.isfinite(args.m):
        raise ConfigError(f"--m: must be finite and >= 0, got {args.m}")
    out = step(args.m, params)
    cw = critical_wealths(params)
    record = {
        "m": args.m,
        "k": out.k,
        "m_prime": out.m_prime,
        "extended": out.extended,
        "pension": out.pension_per_adult,
        "regime": regime(args.m, cw),
        "m_star": _json_num(cw.m_star),
        "m1": _json_num(cw.m1),
        "m2": _json_num(cw.m2),
    }
    print(json.dumps(record, sort_keys=False))
    return 0


TIMESERIES_COLUMNS = (
    "t",
    "population",
    "fertility",
    "mean_wealth",
    "frac_below_mstar",
    "frac_mortal_fertile",
    "frac_barrier",
    "frac_immortal",
    "profit",
)


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    _apply_society_flags(doc, args)
    params = parse_society(doc.get("society"))
    initial = parse_initial(doc.get("initial"))
    run = parse_run(doc.get("run"))
    if args.generations is not None:
        if args.generations < 1:
            raise ConfigError(f"--generations: must be >= 1, got {args.generations}")
        run["generations"] = args.generations
    if args.bins is not None:
        if args.bins < 1:
            raise ConfigError(f"--bins: must be >= 1, got {args.bins}")
        run["bins"] = args.bins
    output = doc.get("output") or {}
    outdir = Path(args.out or output.get("directory") or "out")
    formats = output.get("formats", ["csv", "json"])

    records = simulate(params, initial, run["generations"], n_bins=run["bins"], hist_range=run["hist_range"])
    write_atomic(
        outdir / "timeseries.csv",
        csv_text(TIMESERIES_COLUMNS, ([getattr(r, c) for c in TIMESERIES_COLUMNS] for r in records)),
    )
    modes = {}
    for t in sorted(set(run["dump"])):
        if t > run["generations"]:
            continue
        rec = records[t]
        if rec.histogram is None:
            rows = []
            modes[str(t)] = 0
        else:
            h = rec.histogram
            rows = zip(h.bin_edges[:-1], h.bin_edges[1:], h.bin_weights)
            modes[str(t)] = count_modes(h, run["smooth_window"], run["prominence"])
        write_atomic(outdir / f"hist_t{t}.csv", csv_text(("bin_lo", "bin_hi", "weight"), rows))
    if "json" in formats:
        write_atomic(outdir / "modes.json", json_text({"modes": modes}))
    for t, n in modes.items():
        print(f"t={t} modes={n}")
    return 0


def cmd_tunnel_check(args) -> int:
    if args.e_over_c <= 0:
        raise ConfigError(f"--e-over-c: must be > 0, got {args.e_over_c}")
    if args.gamma <= 0 or args.alpha < 0:
        raise ConfigError("--gamma must be > 0 and --alpha >= 0")
    p = PhasePoint(args.gamma, args.alpha, args.e_over_c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        society = p.society(1.0)
    verdict = can_tunnel(p)
    n = island_index(p)
    dynamic = tunnel_check_dynamic(society)
    print(f"tunnel={'yes' if verdict else 'no'}")
    print(f"island={n if n is not None else 'none'}")
    print(f"oracle_agrees={'yes' if dynamic == verdict else 'no'}")
    if args.alpha == 0 and n is not None:
        lo, hi = island_boundaries(n, args.gamma)
        print(f"boundaries={fmt(lo)},{fmt(hi)}")
    return 0


def cmd_phase_diagram(args) -> int:
    res = args.resolution
    res = (res[0], res[0]) if len(res) == 1 else (res[0], res[1])
    try:
        grid = phase_grid(tuple(args.gamma_range), tuple(args.eoc_range), args.alpha, res)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    outdir = Path(args.out)
    write_atomic(outdir / "phase.csv", csv_text(("gamma", "e_over_c", "island"), grid.rows()))
    write_atomic(outdir / "gamma_n.json", json_text({"gamma_n": {str(n): gamma_n(n) for n in range(1, 6)}}))
    occupied = sorted({int(v) for v in np.unique(grid.islands) if v > 0})
    print(f"cells={grid.islands.size} islands={','.join(map(str, occupied)) or 'none'}")
    return 0


def _parse_slices(text: str) -> list[int]:
    try:
        slices = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"--slices: expected comma-separated integers, got {text!r}") from exc
    if not slices or any(s < 1 for s in slices):
        raise ConfigError(f"--slices: need integers >= 1, got {text!r}")
    return sorted(set(slices))


def cmd_profit_sweep(args) -> int:
    doc = load_config(args.config)
    _apply_society_flags(doc, args)
    params = parse_society(doc.get("society"))
    if params.extension_cost is None:
        raise ConfigError(
            "society.extension_cost: an E sweep requires extension economics; "
            "set extension_cost (its value is replaced by the E grid)"
        )
    initial = parse_initial(doc.get("initial"))
    slices = _parse_slices(args.slices)
    try:
        grid = e_grid(args.e_min, args.e_max, args.e_step)
    except ValueError as exc:
        raise ConfigError(f"--e-min/--e-max/--e-step: {exc}") from exc
    curve = profit_sweep(params, grid, initial, slices, workers=args.workers)
    outdir = Path(args.out or (doc.get("output") or {}).get("directory") or "out")
    header = ["E"] + [f"profit_t{s}" for s in slices]
    rows = ([e] + [curve.profit_by_slice[s][i] for s in slices] for i, e in enumerate(curve.e_values))
    write_atomic(outdir / "profit.csv", csv_text(header, rows))
    write_atomic(outdir / "argmax.json", json_text({"argmax": {str(s): curve.argmax_by_slice[s] for s in slices}}))
    for s in slices:
        print(f"t={s} argmax_E={fmt(curve.argmax_by_slice[s])}")
    return 0


def fertility_sweep_rows(gamma_from: float, gamma_to: float, alpha: float, child_cost: float, m: float, steps: int):
    """(gamma, k) pairs at fixed wealth along an inclusive gamma grid."""
    gammas = np.linspace(gamma_from, gamma_to, steps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return [(float(g), basic_step(m, SocietyParams(float(g), alpha, child_cost)).k) for g in gammas]


def cmd_fertility_sweep(args) -> int:
    if args.child_cost <= 0:
        raise ConfigError(f"--child-cost: must be > 0, got {args.child_cost}")
    if args.alpha < 0:
        raise ConfigError(f"--alpha: must be >= 0, got {args.alpha}")
    if args.steps < 2:
        raise ConfigError(f"--steps: must be >= 2, got {args.steps}")
    g0, g1 = args.gamma_range
    if g0 <= 0 or g1 <= 0:
        raise ConfigError("--gamma-range: values must be > 0")
    m = args.m if args.m is not None else 1e6 * args.child_cost
    if m < 0:
        raise ConfigError(f"--m: must be >= 0, got {m}")
    text = csv_text(("gamma", "k"), fertility_sweep_rows(g0, g1, args.alpha, args.child_cost, m, args.steps))
    if args.out:
        write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ------------------------------------------------------------------


def _society_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--gamma", type=float, required=required)
    p.add_argument("--alpha", type=float, required=required)
    p.add_argument("--child-cost", type=float, required=required)
    p.add_argument("--extension-cost", type=float, default=None)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lifext", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("step", help="one generation for a pair at wealth m")
    p.add_argument("--m", type=float, required=True)
    _society_flags(p, required=True)
    p.set_defaults(func=cmd_step)

    p = sub.add_parser("simulate", help="evolve a wealth ensemble from a JSON config")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--generations", type=int)
    p.add_argument("--bins", type=int)
    _society_flags(p, required=False)
    p.add_argument("--no-extension", action="store_true", help="drop extension_cost from the config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tunnel-check", help="can mortals tunnel into immortality?")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--e-over-c", type=float, required=True)
    p.set_defaults(func=cmd_tunnel_check)

    p = sub.add_parser("phase-diagram", help="rasterize tunneling islands over (gamma, E/C)")
    p.add_argument("--gamma-range", type=float, nargs=2, default=[1.0, 3.0], metavar=("LO", "HI"))
    p.add_argument("--eoc-range", type=float, nargs=2, default=[0.0, 5.0], metavar=("LO", "HI"))
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--resolution", type=int, nargs="+", default=[500])
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("profit-sweep", help="vendor profit versus extension price E")
    p.add_argument("config")
    p.add_argument("--e-min", type=float, default=0.5)
    p.add_argument("--e-max", type=float, default=6.0)
    p.add_argument("--e-step", type=float, default=0.05)
    p.add_argument("--slices", default="1,2,4")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    _society_flags(p, required=False)
    p.set_defaults(func=cmd_profit_sweep)

    p = sub.add_parser("fertility-sweep", help="children per pair at large wealth versus gamma")
    p.add_argument("--gamma-range", type=float, nargs=2, required=True, metavar=("FROM", "TO"))
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--child-cost", type=float, default=1.0)
    p.add_argument("--m", type=float, default=None, help="wealth (default 1e6 * child cost)")
    p.add_argument("--steps", type=int, default=41, help="number of gamma grid points")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fertility_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
