"""Closed-form Nash equilibrium of the hourly quantity game.

Every prosumer i minimizes the expected cost of meeting its planned demand
from the day-ahead market, the balancing market, and its own wind plant:

    U_i(x) = R_i x_i + E[P d_i]

with P the marginal day-ahead price and d_i = u_i - w_i - x_i.  The game is
an aggregative quadratic game; its first-order system is linear with matrix
A = I + 11^T, so the equilibrium is available in closed form:

    x_i* = (u_i - mu_i) + (b + sum_{z != i} R_z - N R_i) / (a (N + 1)).

Whenever both package prices sit at or above the generator base price b, the
shared day-ahead nonnegativity constraint is slack at this point and the
associated multiplier is exactly zero, so no multiplier search is needed.
``best_response_oracle`` solves the same first-order system by direct dense
linear algebra and is kept in the shipped library as a runtime cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import wind
from .errors import ParameterError
from .model import MarketInstance
from .selection import Scenario


@dataclass(frozen=True)
class IncentivePair:
    r_wp: float  # wholesale-package balancing price, EUR/MWh
    r_ls: float  # lump-sum service price component, EUR/MWh


@dataclass(frozen=True)
class NeOutcome:
    x: tuple[float, ...]  # per-prosumer balancing purchases, MWh (negative = injection)
    x_tot: float
    multiplier: float     # shared-constraint multiplier, 0 in the interior regime


@lru_cache(maxsize=None)
def _second_moments_cached(instance: MarketInstance, t: int) -> tuple[float, ...]:
    out = []
    for p in instance.prosumers:
        model = wind.beta_from_spread(
            p.wind.mean_profile[t - 1], p.wind.spread, p.wind.capacity
        )
        out.append(wind.second_moment(model))
    return tuple(out)


def second_moments(instance: MarketInstance, t: int) -> np.ndarray:
    """E[w_i^2] for every prosumer at hour t, via the CF/CCF quadrature."""
    return np.array(_second_moments_cached(instance, t))


def incentive_vector(
    n_prosumers: int, wp_set: frozenset[int], prices: IncentivePair
) -> np.ndarray:
    """Per-prosumer balancing price: wholesale for members of wp_set, the
    lump-sum component for everyone else."""
    wp_mask = np.zeros(n_prosumers, dtype=bool)
    for i in wp_set:
        if not 1 <= i <= n_prosumers:
            raise ParameterError(
                f"scenario references prosumer {i} beyond community size {n_prosumers}"
            )
        wp_mask[i - 1] = True
    return np.where(wp_mask, prices.r_wp, prices.r_ls)


def expected_da_cost(instance: MarketInstance, t: int, i: int, x) -> float:
    """Expected day-ahead energy cost of prosumer i, E[P d_i], at purchases x."""
    x = np.asarray(x, dtype=float)
    N = instance.n_prosumers
    if x.shape != (N,):
        raise ParameterError(f"x must have length {N}, got shape {x.shape}")
    if not 1 <= i <= N:
        raise ParameterError(f"prosumer id {i} outside 1..{N}")
    a, b = instance.gen.a, instance.gen.b
    u = instance.demands(t)
    mu = instance.wind_means(t)
    ew2 = second_moments(instance, t)
    k = i - 1
    others = np.arange(N) != k
    cross = a * float(((u - x - mu)[others]).sum()) + b
    own = u[k] - x[k]
    return (
        (own - mu[k]) * cross
        + a * own**2
        + a * ew2[k]
        - 2.0 * a * mu[k] * own
    )


def prosumer_cost(
    instance: MarketInstance, t: int, i: int, x, r_i: float
) -> float:
    """Expected total cost of prosumer i: incentive payment plus day-ahead cost."""
    x = np.asarray(x, dtype=float)
    return r_i * x[i - 1] + expected_da_cost(instance, t, i, x)


def cost_gradient(
    instance: MarketInstance, t: int, i: int, x, r_i: float
) -> float:
    """Analytic d U_i / d x_i at purchases x."""
    x = np.asarray(x, dtype=float)
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    u = instance.demands(t)
    mu = instance.wind_means(t)
    k = i - 1
    others = np.arange(N) != k
    cross = a * float(((u - x - mu)[others]).sum()) + b
    return r_i - cross - 2.0 * a * (u[k] - x[k]) + 2.0 * a * mu[k]


def nash_equilibrium(
    instance: MarketInstance, t: int, wp_set: frozenset[int] | Scenario,
    prices: IncentivePair,
) -> NeOutcome:
    """Closed-form equilibrium purchases for one selection outcome."""
    if isinstance(wp_set, Scenario):
        wp_set = wp_set.wp_set
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    r = incentive_vector(N, wp_set, prices)
    net = instance.net_demands(t)
    x = net + (b + r.sum() - (N + 1) * r) / (a * (N + 1))
    return NeOutcome(x=tuple(float(v) for v in x), x_tot=float(x.sum()), multiplier=0.0)


def best_response_oracle(
    instance: MarketInstance, t: int, wp_set: frozenset[int] | Scenario,
    prices: IncentivePair,
) -> NeOutcome:
    """Equilibrium via direct dense solve of the first-order system.

    The system matrix I + 11^T has eigenvalues {1, N+1} and is always
    invertible; this route exists to cross-check the closed form at runtime.
    """
    if isinstance(wp_set, Scenario):
        wp_set = wp_set.wp_set
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    r = incentive_vector(N, wp_set, prices)
    net = instance.net_demands(t)
    A = np.eye(N) + np.ones((N, N))
    rhs = net + net.sum() + (b - r) / a
    x = np.linalg.solve(A, rhs)
    return NeOutcome(x=tuple(float(v) for v in x), x_tot=float(x.sum()), multiplier=0.0)


def x_n_tot(
    instance: MarketInstance, t: int, n: int, prices: IncentivePair
) -> float:
    """Total balancing demand of an n-wholesale community.

    Depends on the selection only through the head-count n; the split of
    prosumers plays no role in the total.
    """
    N = instance.n_prosumers
    if not 0 <= n <= N:
        raise ParameterError(f"wholesale count {n} outside 0..{N}")
    a, b = instance.gen.a, instance.gen.b
    mix = n * prices.r_wp + (N - n) * prices.r_ls
    return (N * b - mix) / (a * (N + 1)) + instance.sum_net_demand(t)


def constraint_slack(
    instance: MarketInstance, t: int, n: int, prices: IncentivePair
) -> float:
    """Slack of the day-ahead nonnegativity constraint at the equilibrium."""
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    mix = n * prices.r_wp + (N - n) * prices.r_ls
    return (mix - N * b) / (a * (N + 1))
