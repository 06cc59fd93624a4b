"""Aggregator budget recovery: conservative per-head-count profit floors.

The aggregator's realized net profit in an n-wholesale scenario is its price
income from both packages minus the balancing settlement.  Replacing each
group's net demand sum with the community-wide minimum per prosumer gives a
scenario-independent lower bound z_hat(n); its selection-weighted sum i_t is
the quantity floored at zero by the pricing problem.  The bound is tight
exactly when all prosumers share the same net demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import IncentivePair
from .errors import ParameterError
from .model import MarketInstance
from .objective import total_coefficients
from .partition import Regulation, SubSpace


@dataclass(frozen=True)
class ProfitBound:
    z_hat: tuple[float, ...]  # per head-count lower bound on net profit, EUR
    i_t: float                # selection-weighted expectation, EUR
    min_net_demand: float     # min_i (u_i - mu_i), MWh; may be negative


def min_net_demand(instance: MarketInstance, t: int) -> float:
    return float(instance.net_demands(t).min())


def wp_ls_totals_lb(
    instance: MarketInstance, t: int, n: int, prices: IncentivePair
) -> tuple[float, float]:
    """Lower bounds on the groupwise balancing totals of an n-wholesale split."""
    N = instance.n_prosumers
    if not 0 <= n <= N:
        raise ParameterError(f"wholesale count {n} outside 0..{N}")
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    m = min_net_demand(instance, t)
    r, s = prices.r_wp, prices.r_ls
    wp = (n * b + n * (N - n) * (s - r) - n * r) / d + n * m
    ls = ((N - n) * b + n * (N - n) * (r - s) - (N - n) * s) / d + (N - n) * m
    return wp, ls


def profit_floor(
    instance: MarketInstance,
    t: int,
    prices: IncentivePair,
    subspace: SubSpace,
    q_weights,
) -> ProfitBound:
    """Per-head-count profit floors and their expectation, with balancing
    prices read from the cell's table.  Prices must lie in the cell."""
    q = np.asarray(q_weights, dtype=float)
    N = instance.n_prosumers
    if q.shape != (N + 1,):
        raise ParameterError(f"weights must have length {N + 1}, got {q.shape}")
    gr, gs, h = total_coefficients(instance, t)
    up, down = instance.up_price(t), instance.down_price(t)
    z = []
    for n in range(N + 1):
        wp, ls = wp_ls_totals_lb(instance, t, n, prices)
        cb = up if subspace.cb(n) is Regulation.UP else down
        x_n = gr[n] * prices.r_wp + gs[n] * prices.r_ls + h
        z.append(prices.r_wp * wp + prices.r_ls * ls - cb * x_n)
    z_arr = np.array(z)
    return ProfitBound(
        z_hat=tuple(z_arr),
        i_t=float(q @ z_arr),
        min_net_demand=min_net_demand(instance, t),
    )


def profit_floor_by_sign(instance: MarketInstance, t: int, r, s, q_weights):
    """Vectorized i_t using the sign-consistent balancing price per point.

    Matches ``profit_floor`` with the classified cell's table at every point
    of the plane; used by verification grids.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    q = np.asarray(q_weights, dtype=float)
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    m = min_net_demand(instance, t)
    gr, gs, h = total_coefficients(instance, t)
    up, down = instance.up_price(t), instance.down_price(t)
    total = np.zeros(np.broadcast(r, s).shape)
    for n in range(N + 1):
        if q[n] == 0.0:
            continue
        k = N - n
        wp = (-n * (k + 1) / d) * r + (n * k / d) * s + (n * b / d + n * m)
        ls = (n * k / d) * r + (-k * (n + 1) / d) * s + (k * b / d + k * m)
        x_n = gr[n] * r + gs[n] * s + h
        cb = np.where(x_n >= 0.0, up, down)
        total = total + q[n] * (r * wp + s * ls - cb * x_n)
    return total


def budget_coefficients(
    instance: MarketInstance, t: int, subspace: SubSpace, q_weights
) -> tuple[float, float, float, float, float, float]:
    """Quadratic coefficients of i_t as a function of the price pair (r, s):

        i_t(r, s) = rr r^2 + rs r s + ss s^2 + lr r + ls s + c.

    Used by the pricing solver; must agree with ``profit_floor`` pointwise.
    """
    q = np.asarray(q_weights, dtype=float)
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    m = min_net_demand(instance, t)
    gr, gs, h = total_coefficients(instance, t)
    up, down = instance.up_price(t), instance.down_price(t)
    rr = rs = ss = lr = ls_ = c = 0.0
    for n in range(N + 1):
        if q[n] == 0.0:
            continue
        k = N - n
        # groupwise totals as affine functions of (r, s)
        wp_r, wp_s, wp_c = -n * (k + 1) / d, n * k / d, n * b / d + n * m
        ls_r, ls_s, ls_c = n * k / d, -k * (n + 1) / d, k * b / d + k * m
        cb = up if subspace.cb(n) is Regulation.UP else down
        w = q[n]
        rr += w * wp_r
        rs += w * (wp_s + ls_r)
        ss += w * ls_s
        lr += w * (wp_c - cb * gr[n])
        ls_ += w * (ls_c - cb * gs[n])
        c += w * (-cb * h)
    return rr, rs, ss, lr, ls_, c
