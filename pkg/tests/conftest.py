"""Shared instance builders for the test suite."""

from __future__ import annotations

import numpy as np

from packmarket import solver
from packmarket.errors import InfeasibleError
from packmarket.model import (
    EaConstraints,
    EbmPrices,
    GeneratorCost,
    MarketInstance,
    ProsumerProfile,
    WindModelParams,
)


def _per_hour(value, horizon):
    if np.isscalar(value):
        return (float(value),) * horizon
    return tuple(float(v) for v in value)


def build_instance(
    u,
    mu,
    *,
    a=0.2,
    b=0.5,
    c=1.0,
    cap=10.0,
    spread=20.0,
    q=None,
    up=30.0,
    down=20.0,
    floor_wp=10.0,
    floor_ls=10.0,
    ramp_up=50.0,
    ramp_down=-50.0,
    x_prev_init=0.0,
) -> MarketInstance:
    """Instance from per-prosumer hourly profiles u[i][t], mu[i][t].

    Scalars for prices/floors/ramps broadcast over the horizon; ``q`` defaults
    to 0.5 for everyone.
    """
    u = [tuple(float(x) for x in row) for row in u]
    mu = [tuple(float(x) for x in row) for row in mu]
    n = len(u)
    horizon = len(u[0])
    if q is None:
        q = [0.5] * n
    caps = [cap] * n if np.isscalar(cap) else list(cap)
    prosumers = tuple(
        ProsumerProfile(
            id=i + 1,
            demand=u[i],
            q=float(q[i]),
            wind=WindModelParams(
                capacity=float(caps[i]), mean_profile=mu[i], spread=float(spread)
            ),
        )
        for i in range(n)
    )
    return MarketInstance(
        gen=GeneratorCost(a=a, b=b, c=c),
        prosumers=prosumers,
        ebm=EbmPrices(up=_per_hour(up, horizon), down=_per_hour(down, horizon)),
        ea=EaConstraints(
            r_wp_floor=_per_hour(floor_wp, horizon),
            r_ls_floor=_per_hour(floor_ls, horizon),
            ramp_up=_per_hour(ramp_up, horizon),
            ramp_down=_per_hour(ramp_down, horizon),
            x_prev_init=x_prev_init,
        ),
        horizon=horizon,
    )


def single_hour_instance(net, **kw) -> MarketInstance:
    """One-hour instance with the given per-prosumer net demands u - mu.

    Wind means default to 5.0 (capacity 10), so u = net + 5.
    """
    mu = [[5.0] for _ in net]
    u = [[float(v) + 5.0] for v in net]
    return build_instance(u, mu, **kw)


def random_valid_instance(rng: np.random.Generator, n=None, horizon=1) -> MarketInstance:
    """Structurally valid instance with no feasibility guarantee."""
    n = int(n if n is not None else rng.integers(1, 6))
    a = float(rng.uniform(0.1, 1.5))
    b = float(rng.uniform(0.0, 2.0))
    cap = float(rng.uniform(5.0, 20.0))
    floor_wp = float(rng.uniform(max(b, 0.5) + 0.5, max(b, 0.5) + 8.0))
    floor_ls = float(rng.uniform(max(b, 0.5) + 0.5, max(b, 0.5) + 8.0))
    u = rng.uniform(0.0, 40.0, size=(n, horizon))
    mu = rng.uniform(0.05 * cap, 0.95 * cap, size=(n, horizon))
    down = rng.uniform(-5.0, 25.0, size=horizon)
    up = down + rng.uniform(0.5, 25.0, size=horizon)
    return build_instance(
        u.tolist(),
        mu.tolist(),
        a=a,
        b=b,
        cap=cap,
        spread=float(rng.uniform(5.0, 60.0)),
        q=rng.uniform(0.0, 1.0, size=n).tolist(),
        up=up.tolist(),
        down=down.tolist(),
        floor_wp=floor_wp,
        floor_ls=floor_ls,
        ramp_up=float(rng.uniform(5.0, 60.0)),
        ramp_down=-float(rng.uniform(5.0, 60.0)),
    )


def random_feasible_instance(
    rng: np.random.Generator, n=None, require_hetero=False
) -> MarketInstance:
    """Random single-hour instance on which the hour solve succeeds.

    Sampling targets the economically coherent regime: the community is a
    mild net-long balancer whose surplus the aggregator resells at the
    down-regulation price, with heterogeneity small enough for the
    conservative profit floor to clear.  Draws are retried until a solve
    succeeds.
    """
    for attempt in range(60):
        size = int(n if n is not None else rng.integers(2, 6))
        a = float(rng.uniform(0.15, 0.8))
        b = float(rng.uniform(0.0, 1.0))
        d = a * (size + 1)
        floor = float(rng.uniform(5.0, 10.0))
        ramp = float(rng.uniform(10.0, 30.0))
        c_dn = floor + float(rng.uniform(8.0, 15.0))
        c_up = c_dn + float(rng.uniform(4.0, 15.0))
        rho_mid = floor + float(rng.uniform(1.5, 5.0))
        x_mid = -float(rng.uniform(0.2, 0.7)) * ramp
        s = x_mid + size * (rho_mid - b) / d
        # conservative-profit margin cap on heterogeneity
        rho_star = 0.5 * (c_dn + b + s * d / size)
        m_star = (size / d) * (0.5 * max(c_dn - b - s * d / size, 0.0)) ** 2
        g_cap = 0.3 * m_star / max(rho_star, 1.0)
        if require_hetero and g_cap < 0.05:
            continue
        offsets = rng.uniform(0.0, g_cap / max(size - 1, 1), size=size)
        offsets[0] = 0.0
        nets = s / size - offsets.mean() + offsets
        nets = nets - (nets.sum() - s) / size
        cap = 10.0
        mu = rng.uniform(0.3 * cap, 0.7 * cap, size=size)
        u = nets + mu
        if (u < 0).any():
            continue
        inst = build_instance(
            [[float(v)] for v in u],
            [[float(v)] for v in mu],
            a=a,
            b=b,
            cap=cap,
            spread=float(rng.uniform(10.0, 40.0)),
            q=rng.uniform(0.05, 0.95, size=size).tolist(),
            up=c_up,
            down=c_dn,
            floor_wp=floor,
            floor_ls=floor,
            ramp_up=ramp,
            ramp_down=-ramp,
        )
        try:
            from packmarket import selection

            q = selection.weights(selection.SelectionModel(tuple(inst.qs())))
            solver.solve_hour(inst, 1, q, x_prev=0.0)
        except InfeasibleError:
            continue
        return inst
    raise AssertionError("could not sample a feasible instance in 60 draws")


def reference_day_profiles(seed=42):
    """Synthetic 24-hour demand and wind-mean profiles for the 4-prosumer
    reference community (capacities 10 MW)."""
    rng = np.random.default_rng(seed)
    hours = np.arange(1, 25)
    base = np.array([12.6, 12.9, 13.2, 13.5])
    shape = 1.0 + 0.10 * np.sin(2 * np.pi * (hours - 9) / 24)
    # draws run hour-major to match the shipped demo CSVs exactly
    u = [[0.0] * 24 for _ in range(4)]
    for k in range(24):
        for i in range(4):
            u[i][k] = round(float(base[i] * shape[k] + 0.05 * rng.standard_normal()), 3)
    wshape = 3.4 + 0.8 * np.cos(2 * np.pi * (hours - 3) / 24)
    mu = [[0.0] * 24 for _ in range(4)]
    for k in range(24):
        for i in range(4):
            mu[i][k] = round(float(np.clip(wshape[k] + 0.1 * rng.standard_normal(), 2.6, 7.4)), 3)
    return u, mu


def reference_day_instance(seed=42) -> MarketInstance:
    """Reference 4-prosumer, 24-hour community with synthetic regulation
    prices in a band of tens of EUR/MWh."""
    from packmarket.cli import synthetic_regulation_prices

    u, mu = reference_day_profiles(seed)
    up, down = synthetic_regulation_prices(
        24, up_level=32.0, down_level=22.0, volatility=2.0, seed=7
    )
    return build_instance(
        u,
        mu,
        a=0.2,
        b=0.5,
        c=1.0,
        cap=10.0,
        spread=20.0,
        q=[0.35, 0.5, 0.65, 0.7],
        up=list(up),
        down=list(down),
        floor_wp=10.0,
        floor_ls=10.0,
        ramp_up=10.0,
        ramp_down=-10.0,
    )
