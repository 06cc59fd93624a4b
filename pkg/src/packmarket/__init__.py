"""packmarket: day-ahead price-package pricing for prosumer communities.

An aggregator offers every prosumer two balancing-energy deals — a wholesale
unit price or a lump-sum bill — and picks the hourly price pair minimizing
the community's expected two-market cost under uncertain package selections,
wind uncertainty, ramp limits, and its own budget recovery.
"""

from .errors import (
    InfeasibleError,
    NumericError,
    PackmarketError,
    ParameterError,
    ResourceLimitError,
)
from .equilibrium import IncentivePair, NeOutcome, nash_equilibrium
from .model import (
    EaConstraints,
    EbmPrices,
    GeneratorCost,
    MarketInstance,
    ProsumerProfile,
    ValidationReport,
    WindModelParams,
    validate,
)
from .partition import Case, Partition, Regulation, SubSpace, build_partition, classify
from .selection import Scenario, SelectionModel, enumerate_scenarios, weights
from .settlement import SettlementRecord, settle, usm_baseline
from .solver import (
    CellResult,
    HourSolution,
    SinglePackageSolution,
    solve_day,
    solve_hour,
    solve_hour_single_package,
)

__version__ = "0.1.0"

__all__ = [
    "Case",
    "CellResult",
    "EaConstraints",
    "EbmPrices",
    "GeneratorCost",
    "HourSolution",
    "IncentivePair",
    "InfeasibleError",
    "MarketInstance",
    "NeOutcome",
    "NumericError",
    "PackmarketError",
    "ParameterError",
    "Partition",
    "ProsumerProfile",
    "Regulation",
    "ResourceLimitError",
    "Scenario",
    "SelectionModel",
    "SettlementRecord",
    "SinglePackageSolution",
    "SubSpace",
    "ValidationReport",
    "WindModelParams",
    "build_partition",
    "classify",
    "enumerate_scenarios",
    "nash_equilibrium",
    "settle",
    "solve_day",
    "solve_hour",
    "solve_hour_single_package",
    "usm_baseline",
    "validate",
    "weights",
]
