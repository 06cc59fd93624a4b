"""Domain types and validated construction of a community-market instance.

Conventions used throughout the package:

* hours are 1-based (``t = 1..horizon``) at every public interface; internal
  arrays are 0-based with offset ``t - 1``,
* prosumer ids are 1-based and must match their position in the instance,
* money is EUR, energy is MWh; there is no unit-conversion layer.

All types are frozen dataclasses: instances are immutable after construction
and safe to share across concurrent hour solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _floats(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class GeneratorCost:
    """Quadratic day-ahead generation cost (a/2) d^2 + b d + c.

    The cleared day-ahead price is the marginal cost ``a d + b``.
    """

    a: float  # EUR/(MWh)^2, curvature
    b: float  # EUR/MWh, marginal base price
    c: float  # EUR, fixed cost


@dataclass(frozen=True)
class WindModelParams:
    """Per-plant wind configuration: capacity, hourly mean output, spread.

    ``spread`` is a percentage-style parameter: the hourly output is modelled
    as a scaled beta variable whose normalized variance is
    ``(spread / 100) * m * (1 - m)`` with ``m`` the normalized mean, clipped
    so that both shape parameters stay above 1 (see ``wind.beta_from_spread``).
    """

    capacity: float                  # MW
    mean_profile: tuple[float, ...]  # MWh per hour
    spread: float

    def __post_init__(self):
        object.__setattr__(self, "mean_profile", _floats(self.mean_profile))


@dataclass(frozen=True)
class ProsumerProfile:
    id: int
    demand: tuple[float, ...]  # planned hourly consumption, MWh
    wind: WindModelParams
    q: float                   # probability of choosing the wholesale package

    def __post_init__(self):
        object.__setattr__(self, "demand", _floats(self.demand))


@dataclass(frozen=True)
class EbmPrices:
    """Hourly up-/down-regulation prices of the balancing market.

    Values may be negative: a negative down-regulation price is a positive
    charge on injected surplus.
    """

    up: tuple[float, ...]    # EUR/MWh
    down: tuple[float, ...]  # EUR/MWh

    def __post_init__(self):
        object.__setattr__(self, "up", _floats(self.up))
        object.__setattr__(self, "down", _floats(self.down))


@dataclass(frozen=True)
class EaConstraints:
    """Aggregator-side limits: price floors, ramp window, initial carry-over.

    ``x_prev_init`` is the settled total balancing energy before hour 1.  It
    defaults to 0 (an unbiased cold start) and is configurable because market
    history is not part of an instance.
    """

    r_wp_floor: tuple[float, ...]  # EUR/MWh per hour
    r_ls_floor: tuple[float, ...]  # EUR/MWh per hour
    ramp_up: tuple[float, ...]     # MWh/h per hour, > 0
    ramp_down: tuple[float, ...]   # MWh/h per hour, < 0
    x_prev_init: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "r_wp_floor", _floats(self.r_wp_floor))
        object.__setattr__(self, "r_ls_floor", _floats(self.r_ls_floor))
        object.__setattr__(self, "ramp_up", _floats(self.ramp_up))
        object.__setattr__(self, "ramp_down", _floats(self.ramp_down))


@dataclass(frozen=True)
class MarketInstance:
    """All static parameters of one community market."""

    gen: GeneratorCost
    prosumers: tuple[ProsumerProfile, ...]
    ebm: EbmPrices
    ea: EaConstraints
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "prosumers", tuple(self.prosumers))

    @property
    def n_prosumers(self) -> int:
        return len(self.prosumers)

    def _hour_index(self, t: int) -> int:
        if not 1 <= t <= self.horizon:
            from .errors import ParameterError

            raise ParameterError(f"hour {t} outside 1..{self.horizon}")
        return t - 1

    def demands(self, t: int) -> np.ndarray:
        k = self._hour_index(t)
        return np.array([p.demand[k] for p in self.prosumers])

    def wind_means(self, t: int) -> np.ndarray:
        k = self._hour_index(t)
        return np.array([p.wind.mean_profile[k] for p in self.prosumers])

    def net_demands(self, t: int) -> np.ndarray:
        """Planned consumption minus expected wind output, per prosumer."""
        return self.demands(t) - self.wind_means(t)

    def sum_net_demand(self, t: int) -> float:
        return float(self.net_demands(t).sum())

    def qs(self) -> np.ndarray:
        return np.array([p.q for p in self.prosumers])

    def floor_wp(self, t: int) -> float:
        return self.ea.r_wp_floor[self._hour_index(t)]

    def floor_ls(self, t: int) -> float:
        return self.ea.r_ls_floor[self._hour_index(t)]

    def ramp_up(self, t: int) -> float:
        return self.ea.ramp_up[self._hour_index(t)]

    def ramp_down(self, t: int) -> float:
        return self.ea.ramp_down[self._hour_index(t)]

    def up_price(self, t: int) -> float:
        return self.ebm.up[self._hour_index(t)]

    def down_price(self, t: int) -> float:
        return self.ebm.down[self._hour_index(t)]

    def hours(self) -> range:
        return range(1, self.horizon + 1)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate(instance: MarketInstance) -> ValidationReport:
    """Check every structural invariant of an instance.

    Returns a report instead of raising, so callers can surface all problems
    at once.  A passing instance never trips a precondition error in any
    downstream module.
    """
    bad: list[str] = []
    gen, ea, ebm = instance.gen, instance.ea, instance.ebm
    T, N = instance.horizon, instance.n_prosumers

    if not T >= 1:
        bad.append(f"horizon: must be >= 1, got {T}")
    if not N >= 1:
        bad.append(f"prosumers: community must have N >= 1, got {N}")
    if not gen.a > 0:
        bad.append(f"gen.a: cost curvature must be > 0, got {gen.a}")
    if not gen.b >= 0:
        bad.append(f"gen.b: marginal base price must be >= 0, got {gen.b}")
    if not gen.c >= 0:
        bad.append(f"gen.c: fixed cost must be >= 0, got {gen.c}")

    for name, profile in (("ebm.up", ebm.up), ("ebm.down", ebm.down)):
        if len(profile) != T:
            bad.append(f"{name}: length {len(profile)} != horizon {T}")

    for name, profile in (
        ("ea.r_wp_floor", ea.r_wp_floor),
        ("ea.r_ls_floor", ea.r_ls_floor),
        ("ea.ramp_up", ea.ramp_up),
        ("ea.ramp_down", ea.ramp_down),
    ):
        if len(profile) != T:
            bad.append(f"{name}: length {len(profile)} != horizon {T}")

    for k, (up, dn) in enumerate(zip(ea.ramp_up, ea.ramp_down)):
        if not (up > 0 > dn):
            bad.append(
                f"ea.ramp[t={k + 1}]: ordering violated, need ramp_up > 0 > "
                f"ramp_down, got ({up}, {dn})"
            )
    for k, (fw, fl) in enumerate(zip(ea.r_wp_floor, ea.r_ls_floor)):
        if not fw > 0:
            bad.append(f"ea.r_wp_floor[t={k + 1}]: floor must be > 0, got {fw}")
        if not fl > 0:
            bad.append(f"ea.r_ls_floor[t={k + 1}]: floor must be > 0, got {fl}")

    for pos, p in enumerate(instance.prosumers, start=1):
        tag = f"prosumers[{pos}]"
        if p.id != pos:
            bad.append(f"{tag}.id: must equal position {pos}, got {p.id}")
        if len(p.demand) != T:
            bad.append(f"{tag}.demand: length {len(p.demand)} != horizon {T}")
        if any(u < 0 for u in p.demand):
            bad.append(f"{tag}.demand: every hourly value must be >= 0")
        if not 0 <= p.q <= 1:
            bad.append(f"{tag}.q: selection probability must be in [0, 1], got {p.q}")
        w = p.wind
        if not w.capacity > 0:
            bad.append(f"{tag}.wind.capacity: must be > 0, got {w.capacity}")
        if not w.spread > 0:
            bad.append(f"{tag}.wind.spread: must be > 0, got {w.spread}")
        if len(w.mean_profile) != T:
            bad.append(
                f"{tag}.wind.mean_profile: length {len(w.mean_profile)} != horizon {T}"
            )
        elif w.capacity > 0 and not all(0 < m < w.capacity for m in w.mean_profile):
            bad.append(
                f"{tag}.wind.mean_profile: every hourly mean must lie strictly "
                f"inside (0, capacity={w.capacity})"
            )

    # Every floor must dominate the day-ahead base price; this keeps the
    # quantity game interior and its equilibrium in closed form.
    all_floors = tuple(ea.r_wp_floor) + tuple(ea.r_ls_floor)
    if all_floors and gen.b >= 0 and gen.b > min(all_floors):
        bad.append(
            f"gen.b: base price {gen.b} exceeds the lowest package-price floor "
            f"{min(all_floors)}"
        )

    return ValidationReport(ok=not bad, violations=tuple(bad))
