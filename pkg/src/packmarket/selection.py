"""Package-selection model: per-prosumer wholesale probabilities and the
resulting Poisson-binomial distribution over the wholesale head-count."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ResourceLimitError

SCENARIO_CAP = 20


@dataclass(frozen=True)
class SelectionModel:
    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(q) for q in self.probs)
        if any(not 0 <= q <= 1 for q in probs):
            raise ParameterError("selection probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class Scenario:
    """One realized selection: the set of prosumers on the wholesale package."""

    wp_set: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "wp_set", frozenset(int(i) for i in self.wp_set))
        if any(i < 1 for i in self.wp_set):
            raise ParameterError("prosumer ids are 1-based")

    @property
    def n(self) -> int:
        return len(self.wp_set)

    def bitmask(self) -> int:
        return sum(1 << (i - 1) for i in self.wp_set)

    @classmethod
    def from_bitmask(cls, mask: int, n_prosumers: int) -> "Scenario":
        if not 0 <= mask < (1 << n_prosumers):
            raise ParameterError(
                f"bitmask {mask} outside 0..{(1 << n_prosumers) - 1}"
            )
        return cls(frozenset(i + 1 for i in range(n_prosumers) if mask >> i & 1))


def weights(model: SelectionModel) -> np.ndarray:
    """Probability of each wholesale head-count n = 0..N.

    Computed by convolving the Bernoulli factors one prosumer at a time,
    O(N^2) and exact to floating precision; never by 2^N enumeration.
    """
    dp = np.zeros(model.n + 1)
    dp[0] = 1.0
    for k, q in enumerate(model.probs, start=1):
        dp[1 : k + 1] = dp[1 : k + 1] * (1.0 - q) + dp[:k] * q
        dp[0] *= 1.0 - q
    return dp


def scenario_prob(model: SelectionModel, scenario: Scenario) -> float:
    """Probability of one exact selection outcome."""
    if scenario.wp_set and max(scenario.wp_set) > model.n:
        raise ParameterError(
            f"scenario references prosumer {max(scenario.wp_set)} beyond "
            f"community size {model.n}"
        )
    p = 1.0
    for i, q in enumerate(model.probs, start=1):
        p *= q if i in scenario.wp_set else 1.0 - q
    return p


def enumerate_scenarios(n_prosumers: int, max_n: int = SCENARIO_CAP) -> list[Scenario]:
    """All 2^N selection outcomes in binary-counting order.

    Prosumer 1 is the least significant bit, so the order is reproducible
    byte-for-byte across runs and platforms.
    """
    if n_prosumers < 0:
        raise ParameterError(f"community size must be >= 0, got {n_prosumers}")
    if n_prosumers > max_n:
        raise ResourceLimitError(
            f"refusing to enumerate 2^{n_prosumers} scenarios (cap {max_n})"
        )
    return [
        Scenario.from_bitmask(mask, n_prosumers)
        for mask in range(1 << n_prosumers)
    ]
