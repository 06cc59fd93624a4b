"""Social cost of the community and its expectation over package selections.

At the equilibrium of an n-wholesale community the expected cost incurred in
both markets collapses to a quadratic of the balancing total x_n:

    W_n = a * x_n^2 + Phi * x_n + Psi,

where Phi carries the regulated balancing price (up or down) and Psi collects
the price-independent demand and wind-moment terms.  Phi and Psi are
precomputed once per hour and cached; x_n is affine in the price pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import equilibrium
from .equilibrium import IncentivePair
from .errors import ParameterError
from .model import MarketInstance
from .partition import Regulation, SubSpace


@dataclass(frozen=True)
class HourCoefficients:
    phi_up: float          # EUR/MWh, linear cost coefficient when short
    phi_down: float        # EUR/MWh, when long
    psi: float             # EUR, price-independent term
    rhs: float             # boundary constant N b + a (N + 1) sum(u - mu)
    sum_net_demand: float  # MWh


@lru_cache(maxsize=None)
def hour_coefficients(instance: MarketInstance, t: int) -> HourCoefficients:
    a, b = instance.gen.a, instance.gen.b
    N = instance.n_prosumers
    u = instance.demands(t)
    mu = instance.wind_means(t)
    ew2 = equilibrium.second_moments(instance, t)
    s = float((u - mu).sum())
    sum_u = float(u.sum())
    sum_mu = float(mu.sum())
    # cross-moment sum over ordered pairs i != z, assembled stably
    cross = sum_mu**2 - float((mu**2).sum())
    psi = (
        a * sum_u**2
        - 2.0 * a * sum_u * sum_mu
        + a * float(ew2.sum())
        + a * cross
        + b * s
    )
    base = -2.0 * a * s - b
    return HourCoefficients(
        phi_up=instance.up_price(t) + base,
        phi_down=instance.down_price(t) + base,
        psi=psi,
        rhs=N * b + a * (N + 1) * s,
        sum_net_demand=s,
    )


def total_coefficients(
    instance: MarketInstance, t: int
) -> tuple[np.ndarray, np.ndarray, float]:
    """Affine map from prices to balancing totals: x_n = gr[n] r + gs[n] s + h."""
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    ns = np.arange(N + 1, dtype=float)
    return -ns / d, -(N - ns) / d, N * b / d + instance.sum_net_demand(t)


def social_cost(
    instance: MarketInstance,
    t: int,
    n: int,
    prices: IncentivePair,
    cb: Regulation,
) -> float:
    """W_n at a price pair with the given balancing-price direction."""
    coeffs = hour_coefficients(instance, t)
    phi = coeffs.phi_up if cb is Regulation.UP else coeffs.phi_down
    x = equilibrium.x_n_tot(instance, t, n, prices)
    return instance.gen.a * x**2 + phi * x + coeffs.psi


def expected_social_cost(
    instance: MarketInstance,
    t: int,
    prices: IncentivePair,
    subspace: SubSpace,
    q_weights,
) -> float:
    """Selection-weighted social cost with balancing directions read from the
    cell's table.  The caller guarantees the prices lie in the cell."""
    assert subspace.contains(prices), "prices must lie in the given cell"
    q = np.asarray(q_weights, dtype=float)
    N = instance.n_prosumers
    if q.shape != (N + 1,):
        raise ParameterError(f"weights must have length {N + 1}, got {q.shape}")
    total = 0.0
    for n in range(N + 1):
        if q[n] == 0.0:
            continue
        total += q[n] * social_cost(instance, t, n, prices, subspace.cb(n))
    return total


def expected_cost_by_sign(instance: MarketInstance, t: int, r, s, q_weights):
    """Vectorized expectation using the sign-consistent balancing price at
    each point.  Equals the cell-table expectation everywhere, because each
    cell's table matches the sign of every balancing total on that cell;
    used by verification grids."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    q = np.asarray(q_weights, dtype=float)
    coeffs = hour_coefficients(instance, t)
    gr, gs, h = total_coefficients(instance, t)
    a = instance.gen.a
    x = (
        np.multiply.outer(r, gr)
        + np.multiply.outer(s, gs)
        + h
    )  # shape (*pts, N + 1)
    phi = np.where(x >= 0.0, coeffs.phi_up, coeffs.phi_down)
    w = a * x**2 + phi * x + coeffs.psi
    return w @ q


def extreme_totals(
    instance: MarketInstance, t: int, prices: IncentivePair
) -> tuple[float, float]:
    """Balancing totals of the all-lump-sum and all-wholesale communities.

    These bracket every head-count's total (the total is affine in n), with
    the ordering decided by the sign of R_WP - R_LS.
    """
    N = instance.n_prosumers
    return (
        equilibrium.x_n_tot(instance, t, 0, prices),
        equilibrium.x_n_tot(instance, t, N, prices),
    )
