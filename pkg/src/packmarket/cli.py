"""Command-line front end: config/CSV ingestion, run orchestration, reports.

Modes:

* ``optimize``    — solve the full horizon, emit the hourly price table, the
                    expected-cost series, per-cell diagnostics, and the
                    selection probability/cost distribution of one hour.
* ``settle``      — settle a given scenario for every hour, or every scenario
                    for one hour when no scenario is given.
* ``scenarios``   — list all 2^N package-selection combinations.
* ``usm-compare`` — optimized costs next to the uncoordinated single-package
                    baseline.

Exit codes: 0 ok, 2 input error, 3 infeasible, 4 numeric warning escalated
(with --verify).  Outputs are plain CSV plus a text summary and are
byte-identical across runs with the same config.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import budget, equilibrium, objective, selection, settlement, solver
from .equilibrium import IncentivePair
from .errors import InfeasibleError, NumericError, PackmarketError, ParameterError
from .model import (
    EaConstraints,
    EbmPrices,
    GeneratorCost,
    MarketInstance,
    ProsumerProfile,
    WindModelParams,
    validate,
)
from .partition import Regulation
from .selection import Scenario, SelectionModel
from .solver import HourSolution

MODES = ("optimize", "settle", "scenarios", "usm-compare")


@dataclass(frozen=True)
class RunConfig:
    config_path: Path
    mode: str
    hour: int
    scenario: Optional[int]
    out_dir: Path
    seed: int
    verify: bool


# ---------------------------------------------------------------------------
# ingestion


def _fail(msg: str) -> ParameterError:
    return ParameterError(msg)


def read_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise _fail(f"{path}: cannot read config ({exc})") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise _fail(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(cfg, dict):
        raise _fail(f"{path}: config must be a mapping")
    return cfg


def _read_csv_rows(path: Path) -> list[tuple[int, list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), 1)]
    except OSError as exc:
        raise _fail(f"{path}: cannot read ({exc})") from exc
    rows = [(ln, row) for ln, row in rows if row]
    if not rows:
        raise _fail(f"{path}:1: file is empty")
    return rows


def _parse_float(path: Path, lineno: int, cell: str, what: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise _fail(f"{path}:{lineno}: {what} is not a number: {cell!r}") from None


def read_profile_csv(path: Path, n_prosumers: int, horizon: int) -> list[tuple[float, ...]]:
    """Per-prosumer hourly profiles from 'hour,p1..pN' rows.

    Returns one tuple of length ``horizon`` per prosumer.
    """
    rows = _read_csv_rows(path)
    header_ln, header = rows[0]
    expected = ["hour"] + [f"p{i}" for i in range(1, n_prosumers + 1)]
    if [h.strip() for h in header] != expected:
        raise _fail(
            f"{path}:{header_ln}: header must be {','.join(expected)}, "
            f"got {','.join(header)}"
        )
    data = rows[1:]
    if len(data) != horizon:
        raise _fail(f"{path}: expected {horizon} data rows, got {len(data)}")
    out = [[0.0] * horizon for _ in range(n_prosumers)]
    for k, (ln, row) in enumerate(data):
        if len(row) != n_prosumers + 1:
            raise _fail(f"{path}:{ln}: expected {n_prosumers + 1} columns, got {len(row)}")
        hour = _parse_float(path, ln, row[0], "hour")
        if int(hour) != k + 1:
            raise _fail(f"{path}:{ln}: hours must run 1..{horizon} in order, got {row[0]}")
        for i in range(n_prosumers):
            out[i][k] = _parse_float(path, ln, row[i + 1], f"p{i + 1}")
    return [tuple(col) for col in out]


def read_price_csv(path: Path, horizon: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Regulation prices from 'hour,up_price,down_price' rows."""
    rows = _read_csv_rows(path)
    header_ln, header = rows[0]
    if [h.strip() for h in header] != ["hour", "up_price", "down_price"]:
        raise _fail(
            f"{path}:{header_ln}: header must be hour,up_price,down_price, "
            f"got {','.join(header)}"
        )
    data = rows[1:]
    if len(data) != horizon:
        raise _fail(f"{path}: expected {horizon} data rows, got {len(data)}")
    up, down = [], []
    for k, (ln, row) in enumerate(data):
        if len(row) != 3:
            raise _fail(f"{path}:{ln}: expected 3 columns, got {len(row)}")
        hour = _parse_float(path, ln, row[0], "hour")
        if int(hour) != k + 1:
            raise _fail(f"{path}:{ln}: hours must run 1..{horizon} in order, got {row[0]}")
        up.append(_parse_float(path, ln, row[1], "up_price"))
        down.append(_parse_float(path, ln, row[2], "down_price"))
    return tuple(up), tuple(down)


def synthetic_regulation_prices(
    horizon: int,
    up_level: float = 28.0,
    down_level: float = 15.0,
    volatility: float = 3.0,
    seed: int = 0,
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Deterministic regulation-price series with a daily swing plus noise.

    Stands in for real market data: the up-regulation series stays above the
    down-regulation series, both move within a band of width ~2*volatility
    around their levels.
    """
    rng = np.random.default_rng(seed)
    hours = np.arange(1, horizon + 1)
    swing = np.sin(2.0 * np.pi * (hours - 7) / max(horizon, 1))
    up = up_level + volatility * (0.6 * swing + 0.4 * rng.standard_normal(horizon))
    down = down_level + volatility * (
        0.5 * swing + 0.35 * rng.standard_normal(horizon)
    )
    down = np.minimum(down, up - 1.0)  # dual-price ordering
    return tuple(float(v) for v in up), tuple(float(v) for v in down)


def _hourly(cfg_value, horizon: int, what: str) -> tuple[float, ...]:
    if isinstance(cfg_value, (int, float)):
        return (float(cfg_value),) * horizon
    if isinstance(cfg_value, (list, tuple)):
        if len(cfg_value) != horizon:
            raise _fail(f"{what}: expected {horizon} hourly values, got {len(cfg_value)}")
        return tuple(float(v) for v in cfg_value)
    raise _fail(f"{what}: must be a number or a list of {horizon} numbers")


def load_instance(cfg: dict, base_dir: Path) -> MarketInstance:
    """Build and validate a market instance from a parsed config mapping."""
    try:
        horizon = int(cfg["horizon"])
        gen_cfg = cfg["generator"]
        pros_cfg = cfg["prosumers"]
        floors = cfg["floors"]
        ramp = cfg["ramp"]
        data = cfg["data"]
    except (KeyError, TypeError) as exc:
        raise _fail(f"config: missing or malformed section ({exc})") from exc
    gen = GeneratorCost(
        a=float(gen_cfg["a"]), b=float(gen_cfg["b"]), c=float(gen_cfg["c"])
    )
    n = len(pros_cfg)
    demand = read_profile_csv(base_dir / data["demand"], n, horizon)
    mean_wind = read_profile_csv(base_dir / data["mean_wind"], n, horizon)
    if "regulation_prices" in data:
        up, down = read_price_csv(base_dir / data["regulation_prices"], horizon)
    elif "synthetic_prices" in data:
        syn = data["synthetic_prices"] or {}
        up, down = synthetic_regulation_prices(
            horizon,
            up_level=float(syn.get("up_level", 28.0)),
            down_level=float(syn.get("down_level", 15.0)),
            volatility=float(syn.get("volatility", 3.0)),
            seed=int(syn.get("seed", 0)),
        )
    else:
        raise _fail("config: data needs regulation_prices or synthetic_prices")
    prosumers = []
    for k, p in enumerate(pros_cfg):
        wind_cfg = p["wind"]
        prosumers.append(
            ProsumerProfile(
                id=int(p["id"]),
                demand=demand[k],
                q=float(p["q"]),
                wind=WindModelParams(
                    capacity=float(wind_cfg["capacity"]),
                    mean_profile=mean_wind[k],
                    spread=float(wind_cfg["spread"]),
                ),
            )
        )
    instance = MarketInstance(
        gen=gen,
        prosumers=tuple(prosumers),
        ebm=EbmPrices(up=up, down=down),
        ea=EaConstraints(
            r_wp_floor=_hourly(floors["wp"], horizon, "floors.wp"),
            r_ls_floor=_hourly(floors["ls"], horizon, "floors.ls"),
            ramp_up=_hourly(ramp["up"], horizon, "ramp.up"),
            ramp_down=_hourly(ramp["down"], horizon, "ramp.down"),
            x_prev_init=float(cfg.get("x_prev_init", 0.0)),
        ),
        horizon=horizon,
    )
    report = validate(instance)
    if not report.ok:
        raise _fail("instance invalid:\n  " + "\n  ".join(report.violations))
    return instance


# ---------------------------------------------------------------------------
# report writing


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v!r}" if isinstance(v, float) else str(v) for v in row]
            )


def _package_columns(scenario: Scenario, n: int) -> list[str]:
    return ["WP" if i in scenario.wp_set else "LS" for i in range(1, n + 1)]


def _scenario_social_cost(
    instance: MarketInstance, t: int, prices: IncentivePair, n: int
) -> float:
    x = equilibrium.x_n_tot(instance, t, n, prices)
    cb = Regulation.UP if x >= 0 else Regulation.DOWN
    return objective.social_cost(instance, t, n, prices, cb)


def run_optimize(config: RunConfig, instance: MarketInstance) -> int:
    q = selection.weights(SelectionModel(tuple(instance.qs())))
    sols = solver.solve_day(instance, q)
    out = config.out_dir
    _write_csv(
        out / "prices.csv",
        ["t", "r_wp", "r_ls", "n_sigma", "case", "expected_cost", "x_prev_out"],
        [
            (
                s.t,
                s.prices.r_wp,
                s.prices.r_ls,
                s.n_sigma_star,
                s.case.value,
                s.expected_cost,
                s.x_prev_out,
            )
            for s in sols
        ],
    )
    _write_csv(
        out / "expected_cost.csv",
        ["t", "expected_cost"],
        [(s.t, s.expected_cost) for s in sols],
    )
    _write_csv(
        out / "cells.csv",
        ["t", "case", "n_sigma", "status", "r_wp", "r_ls", "cost", "budget_active", "warning"],
        [
            (
                s.t,
                c.case.value,
                c.n_sigma,
                c.status,
                c.prices.r_wp if c.prices else "",
                c.prices.r_ls if c.prices else "",
                c.cost if c.cost is not None else "",
                int(c.budget_active),
                c.warning or c.reason or "",
            )
            for s in sols
            for c in s.per_cell
        ],
    )
    t0 = config.hour
    if not 1 <= t0 <= instance.horizon:
        raise _fail(f"--hour {t0} outside 1..{instance.horizon}")
    model_sel = SelectionModel(tuple(instance.qs()))
    sol0 = sols[t0 - 1]
    N = instance.n_prosumers
    rows = []
    for number, scen in enumerate(selection.enumerate_scenarios(N), start=1):
        rows.append(
            (
                number,
                scen.bitmask(),
                *_package_columns(scen, N),
                scen.n,
                selection.scenario_prob(model_sel, scen),
                _scenario_social_cost(instance, t0, sol0.prices, scen.n),
            )
        )
    _write_csv(
        out / f"hour{t0:02d}_scenarios.csv",
        ["scenario", "bitmask"]
        + [f"p{i}" for i in range(1, N + 1)]
        + ["wp_count", "probability", "social_cost"],
        rows,
    )
    warnings = [c for s in sols for c in s.per_cell if c.warning]
    costs = [s.expected_cost for s in sols]
    ls_below = sum(1 for s in sols if s.prices.r_ls < s.prices.r_wp)
    lines = [
        "packmarket optimize summary",
        f"hours: {instance.horizon}, prosumers: {instance.n_prosumers}",
        f"day expected social cost: {sum(costs):.2f}",
        f"hourly expected cost range: [{min(costs):.2f}, {max(costs):.2f}]",
        f"lump-sum price below wholesale price in {ls_below}/{instance.horizon} "
        "hours (parameter-dependent observation, not a guarantee)",
        f"cell warnings: {len(warnings)}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")

    if config.verify:
        issues = _verify_solutions(instance, q, sols, config.seed)
        if issues:
            (out / "verify.txt").write_text("\n".join(issues) + "\n")
            print("\n".join(issues), file=sys.stderr)
            return 4
        (out / "verify.txt").write_text("all verification oracles passed\n")
    if warnings and config.verify:
        return 4
    return 0


def _verify_solutions(
    instance: MarketInstance, q, sols: Sequence[HourSolution], seed: int
) -> list[str]:
    """Runtime oracles: dense-solve equilibrium cross-check and a feasibility
    grid sweep of the price plane for every hour."""
    rng = np.random.default_rng(seed)
    issues = []
    for sol in sols:
        t = sol.t
        for _ in range(3):
            mask = int(rng.integers(0, 1 << instance.n_prosumers))
            scen = Scenario.from_bitmask(mask, instance.n_prosumers)
            a = equilibrium.nash_equilibrium(instance, t, scen, sol.prices)
            b = equilibrium.best_response_oracle(instance, t, scen, sol.prices)
            gap = max(abs(x - y) for x, y in zip(a.x, b.x))
            if gap > 1e-9:
                issues.append(
                    f"hour {t}: equilibrium closed form deviates from dense "
                    f"solve by {gap:.3e} (scenario {mask})"
                )
        lo, hi = solver.ramp_price_window(instance, t, sol.x_prev_in)
        r_lo = max(instance.floor_wp(t), lo)
        s_lo = max(instance.floor_ls(t), lo)
        if r_lo > hi or s_lo > hi:
            continue
        r = np.linspace(r_lo, hi, solver.GRID_POINTS)
        s = np.linspace(s_lo, hi, solver.GRID_POINTS)
        rr, ss = np.meshgrid(r, s, indexing="ij")
        cost = objective.expected_cost_by_sign(instance, t, rr.ravel(), ss.ravel(), q)
        ok = (
            budget.profit_floor_by_sign(instance, t, rr.ravel(), ss.ravel(), q)
            >= -solver.BUDGET_TOL
        )
        if not ok.any():
            continue
        best = float(np.min(np.where(ok, cost, np.inf)))
        if best < sol.expected_cost - 1e-6 * max(1.0, abs(sol.expected_cost)):
            issues.append(
                f"hour {t}: grid point beats the returned objective "
                f"({best:.9g} < {sol.expected_cost:.9g})"
            )
    return issues


def run_settle(config: RunConfig, instance: MarketInstance) -> int:
    q = selection.weights(SelectionModel(tuple(instance.qs())))
    sols = solver.solve_day(instance, q)
    N = instance.n_prosumers
    if config.scenario is not None:
        scen = Scenario.from_bitmask(config.scenario, N)
        jobs = [(t, scen) for t in instance.hours()]
    else:
        t0 = config.hour
        if not 1 <= t0 <= instance.horizon:
            raise _fail(f"--hour {t0} outside 1..{instance.horizon}")
        jobs = [(t0, scen) for scen in selection.enumerate_scenarios(N)]
    header = (
        ["t", "bitmask", "wp_count", "cb", "x_tot", "ea_profit", "da_demand"]
        + [f"x{i}" for i in range(1, N + 1)]
        + [f"b{i}" for i in range(1, N + 1)]
    )
    rows = []
    for t, scen in jobs:
        rec = settlement.settle(instance, t, sols[t - 1], scen)
        rows.append(
            (
                t,
                scen.bitmask(),
                scen.n,
                rec.cb_used.value,
                rec.x_tot,
                rec.ea_profit,
                rec.da_demand,
                *rec.x,
                *[
                    rec.ls_prices[i] if i in rec.ls_prices else ""
                    for i in range(1, N + 1)
                ],
            )
        )
    _write_csv(config.out_dir / "settlement.csv", header, rows)
    return 0


def run_scenarios(config: RunConfig, instance: MarketInstance) -> int:
    N = instance.n_prosumers
    model_sel = SelectionModel(tuple(instance.qs()))
    rows = [
        (
            number,
            scen.bitmask(),
            *_package_columns(scen, N),
            scen.n,
            selection.scenario_prob(model_sel, scen),
        )
        for number, scen in enumerate(selection.enumerate_scenarios(N), start=1)
    ]
    _write_csv(
        config.out_dir / "scenarios.csv",
        ["scenario", "bitmask"]
        + [f"p{i}" for i in range(1, N + 1)]
        + ["wp_count", "probability"],
        rows,
    )
    return 0


def run_usm_compare(config: RunConfig, instance: MarketInstance) -> int:
    q = selection.weights(SelectionModel(tuple(instance.qs())))
    sols = solver.solve_day(instance, q)
    rows = []
    carry = instance.ea.x_prev_init
    for t in instance.hours():
        usm_x, usm_cost = settlement.usm_baseline(instance, t)
        sp = solver.solve_hour_single_package(instance, t, carry)
        carry = sp.x_tot
        rows.append(
            (
                t,
                usm_x,
                usm_cost,
                sp.r_wp,
                sp.expected_cost,
                sols[t - 1].expected_cost,
            )
        )
    _write_csv(
        config.out_dir / "usm_compare.csv",
        ["t", "usm_x_tot", "usm_cost", "sp_r_wp", "sp_cost", "two_package_cost"],
        rows,
    )
    total_usm = sum(r[2] for r in rows)
    total_sp = sum(r[4] for r in rows)
    total_two = sum(r[5] for r in rows)
    (config.out_dir / "usm_summary.txt").write_text(
        "uncoordinated baseline vs optimized pricing\n"
        f"day totals: baseline={total_usm:.2f}, single-package optimized="
        f"{total_sp:.2f}, two-package expected={total_two:.2f}\n"
    )
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="packmarket",
        description="price-package pricing engine for prosumer communities",
    )
    parser.add_argument("--config", required=True, type=Path, help="YAML market config")
    parser.add_argument("--mode", choices=MODES, default="optimize")
    parser.add_argument(
        "--hour", type=int, default=1, help="hour for distribution/settlement reports"
    )
    parser.add_argument(
        "--scenario",
        type=int,
        default=None,
        help="selection bitmask; bit i-1 set puts prosumer i on the wholesale package",
    )
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--seed", type=int, default=0, help="seed for oracle sampling")
    parser.add_argument(
        "--verify",
        action="store_true",
        help="run the dense-solve and price-grid oracles inline",
    )
    return parser


def run(config: RunConfig) -> int:
    cfg = read_config(config.config_path)
    instance = load_instance(cfg, config.config_path.parent)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    if config.mode == "optimize":
        return run_optimize(config, instance)
    if config.mode == "settle":
        return run_settle(config, instance)
    if config.mode == "scenarios":
        return run_scenarios(config, instance)
    if config.mode == "usm-compare":
        return run_usm_compare(config, instance)
    raise _fail(f"unknown mode {config.mode}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        config_path=args.config,
        mode=args.mode,
        hour=args.hour,
        scenario=args.scenario,
        out_dir=args.out,
        seed=args.seed,
        verify=args.verify,
    )
    try:
        return run(config)
    except ParameterError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except PackmarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
