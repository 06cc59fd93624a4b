"""Post-realization settlement and the uncoordinated-market baseline.

Once the package selections are known, the settled prices fix every
prosumer's equilibrium purchases.  Lump-sum customers are then billed the
balancing-service component plus their expected day-ahead cost, so the
identity

    B_j - E[day-ahead cost of j] = R_LS * x_j

holds exactly for every settlement.  The realized balancing price follows
the sign of the realized total (known at settlement time); on every cell of
the price partition this agrees with the table used by the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import equilibrium
from .errors import ParameterError
from .model import MarketInstance
from .objective import hour_coefficients
from .partition import Regulation
from .selection import Scenario
from .solver import HourSolution


@dataclass(frozen=True)
class SettlementRecord:
    t: int
    scenario: Scenario
    x: tuple[float, ...]              # per-prosumer balancing purchases, MWh
    x_tot: float
    ls_prices: dict[int, float]       # lump-sum bills per lump-sum prosumer, EUR
    balancing_service: dict[int, float]  # R_LS * x_j component of each bill, EUR
    ea_profit: float                  # realized aggregator net profit, EUR
    da_demand: float                  # expected day-ahead demand, MWh
    cb_used: Regulation


def settle(
    instance: MarketInstance,
    t: int,
    solution: HourSolution,
    scenario: Scenario,
) -> SettlementRecord:
    """Settle one realized selection at the hour's optimized prices."""
    N = instance.n_prosumers
    if scenario.wp_set and max(scenario.wp_set) > N:
        raise ParameterError(
            f"scenario references prosumer {max(scenario.wp_set)} beyond "
            f"community size {N}"
        )
    prices = solution.prices
    ne = equilibrium.nash_equilibrium(instance, t, scenario, prices)
    x = np.array(ne.x)
    cb_used = Regulation.UP if ne.x_tot >= 0 else Regulation.DOWN
    cb_price = (
        instance.up_price(t) if cb_used is Regulation.UP else instance.down_price(t)
    )
    wp_ids = sorted(scenario.wp_set)
    ls_ids = [i for i in range(1, N + 1) if i not in scenario.wp_set]
    sum_wp = float(sum(x[i - 1] for i in wp_ids))
    sum_ls = float(sum(x[i - 1] for i in ls_ids))
    ea_profit = (
        prices.r_wp * sum_wp + prices.r_ls * sum_ls - cb_price * ne.x_tot
    )
    ls_prices: dict[int, float] = {}
    service: dict[int, float] = {}
    for j in ls_ids:
        service[j] = prices.r_ls * float(x[j - 1])
        ls_prices[j] = service[j] + equilibrium.expected_da_cost(instance, t, j, x)
    return SettlementRecord(
        t=t,
        scenario=scenario,
        x=ne.x,
        x_tot=ne.x_tot,
        ls_prices=ls_prices,
        balancing_service=service,
        ea_profit=float(ea_profit),
        da_demand=instance.sum_net_demand(t) - ne.x_tot,
        cb_used=cb_used,
    )


def usm_baseline(instance: MarketInstance, t: int) -> tuple[float, float]:
    """Uncoordinated single-package market: every prosumer faces the
    up-regulation price directly and no aggregator pricing happens.

    Returns the fixed balancing total and the resulting social cost.  Needs
    the up-regulation price to dominate the generator base price, the same
    interiority condition the aggregated market puts on its price floors.
    """
    c_ur = instance.up_price(t)
    b = instance.gen.b
    if not 0 <= b <= c_ur:
        raise ParameterError(
            f"baseline needs 0 <= b <= up-regulation price, got b={b}, "
            f"up={c_ur} at hour {t}"
        )
    N = instance.n_prosumers
    a = instance.gen.a
    x_hat = (N * b - N * c_ur) / (a * (N + 1)) + instance.sum_net_demand(t)
    coeffs = hour_coefficients(instance, t)
    phi = coeffs.phi_up if x_hat >= 0 else coeffs.phi_down
    return float(x_hat), float(a * x_hat**2 + phi * x_hat + coeffs.psi)
