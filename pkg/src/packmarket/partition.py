"""Partition of the (R_WP, R_LS) price plane by balancing direction.

For an n-wholesale community the total balancing demand is affine in the
price pair and crosses zero on the line

    n * R_WP + (N - n) * R_LS = N b + a (N + 1) * sum(u - mu).

All N + 1 lines share the same right-hand side, so they form a fan through
the apex point (rhs / N, rhs / N) on the diagonal — as does the diagonal
itself.  Between consecutive lines the sign of the balancing total is fixed
for every head-count n, so the regulated balancing price is deterministic
there.  Splitting each side of the diagonal into its N + 2 wedges yields the
2N + 4 cells handled here.

On the half-plane R_LS >= R_WP the balancing total is non-decreasing in n;
the cell with inversion point n_sigma assigns the down-regulation price to
n <= n_sigma and the up-regulation price above it (n_sigma = -1: everything
up; n_sigma = N: everything down).  The mirror rule applies on the strict
half-plane R_LS < R_WP.  The diagonal itself belongs to the first family.
A zero balancing total always resolves to the up-regulation price.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .equilibrium import IncentivePair
from .model import MarketInstance


class Case(Enum):
    GE = "GE"  # R_LS >= R_WP
    LT = "LT"  # R_LS <  R_WP


class Regulation(Enum):
    UP = "UP"
    DOWN = "DOWN"


@dataclass(frozen=True)
class HalfPlane:
    """Linear inequality a_wp * R_WP + a_ls * R_LS >= rhs (or > when strict)."""

    a_wp: float
    a_ls: float
    rhs: float
    strict: bool

    def contains(self, r_wp: float, r_ls: float) -> bool:
        value = self.a_wp * r_wp + self.a_ls * r_ls
        return value > self.rhs if self.strict else value >= self.rhs


@dataclass(frozen=True)
class BoundaryLine:
    """Zero-crossing line of the n-wholesale balancing total:
    n * R_WP + (N - n) * R_LS = rhs."""

    n: int
    rhs: float


@dataclass(frozen=True)
class SubSpace:
    case: Case
    n_sigma: int  # -1 .. N
    half_planes: tuple[HalfPlane, ...]
    cb_table: tuple[Regulation, ...]  # index n = 0..N

    @property
    def label(self) -> str:
        return f"{self.case.value}[{self.n_sigma}]"

    def cb(self, n: int) -> Regulation:
        return self.cb_table[n]

    def contains(self, prices: IncentivePair) -> bool:
        return all(h.contains(prices.r_wp, prices.r_ls) for h in self.half_planes)


@dataclass(frozen=True)
class Partition:
    n_prosumers: int
    rhs: float
    sum_net_demand: float
    lines: tuple[BoundaryLine, ...]
    cells: tuple[SubSpace, ...]

    @property
    def apex(self) -> float:
        """Common point of all boundary lines (and the diagonal): (apex, apex)."""
        return self.rhs / self.n_prosumers


def _cb_table(case: Case, n_sigma: int, n_prosumers: int) -> tuple[Regulation, ...]:
    low, high = (
        (Regulation.DOWN, Regulation.UP)
        if case is Case.GE
        else (Regulation.UP, Regulation.DOWN)
    )
    return tuple(
        low if n <= n_sigma else high for n in range(n_prosumers + 1)
    )


def _cell_planes(case: Case, n_sigma: int, N: int, rhs: float) -> tuple[HalfPlane, ...]:
    def line_ge(n: int, strict: bool) -> HalfPlane:
        # n-th boundary line, "community short at head-count n is over": > rhs
        return HalfPlane(float(n), float(N - n), rhs, strict)

    def line_le(n: int) -> HalfPlane:
        return HalfPlane(-float(n), -float(N - n), -rhs, strict=False)

    case_plane = (
        HalfPlane(-1.0, 1.0, 0.0, strict=False)  # R_LS - R_WP >= 0
        if case is Case.GE
        else HalfPlane(1.0, -1.0, 0.0, strict=True)  # R_WP - R_LS > 0
    )
    if case is Case.GE:
        if n_sigma == -1:
            cell = (line_le(0),)
        elif n_sigma == N:
            cell = (line_ge(N, strict=True),)
        else:
            cell = (line_ge(n_sigma, strict=True), line_le(n_sigma + 1))
    else:
        if n_sigma == -1:
            cell = (line_ge(0, strict=True),)
        elif n_sigma == N:
            cell = (line_le(N),)
        else:
            cell = (line_le(n_sigma), line_ge(n_sigma + 1, strict=True))
    return (case_plane,) + cell


def build_partition(instance: MarketInstance, t: int) -> Partition:
    """All 2N + 4 cells of the price plane for hour t."""
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    s = instance.sum_net_demand(t)
    rhs = N * b + a * (N + 1) * s
    lines = tuple(BoundaryLine(n, rhs) for n in range(N + 1))
    cells = tuple(
        SubSpace(
            case=case,
            n_sigma=n_sigma,
            half_planes=_cell_planes(case, n_sigma, N, rhs),
            cb_table=_cb_table(case, n_sigma, N),
        )
        for case in (Case.GE, Case.LT)
        for n_sigma in range(-1, N + 1)
    )
    return Partition(
        n_prosumers=N, rhs=rhs, sum_net_demand=s, lines=lines, cells=cells
    )


def classify(partition: Partition, point: IncentivePair) -> SubSpace:
    """The unique cell containing a price pair.

    Resolution is by direct scan of the line values L(n) = n * R_WP +
    (N - n) * R_LS, which are monotone in n on each side of the diagonal,
    so exactly one cell matches every point of the plane.
    """
    N, rhs = partition.n_prosumers, partition.rhs
    r, s = point.r_wp, point.r_ls
    case = Case.GE if s >= r else Case.LT
    values = [n * r + (N - n) * s for n in range(N + 1)]
    if case is Case.GE:
        # values are non-increasing in n
        if values[0] <= rhs:
            n_sigma = -1
        elif values[N] > rhs:
            n_sigma = N
        else:
            n_sigma = next(
                n for n in range(N) if values[n] > rhs >= values[n + 1]
            )
    else:
        # values are increasing in n
        if values[0] > rhs:
            n_sigma = -1
        elif values[N] <= rhs:
            n_sigma = N
        else:
            n_sigma = next(
                n for n in range(N) if values[n] <= rhs < values[n + 1]
            )
    index = (0 if case is Case.GE else N + 2) + (n_sigma + 1)
    cell = partition.cells[index]
    assert cell.case is case and cell.n_sigma == n_sigma
    return cell


def partition_report(partition: Partition) -> str:
    """Human-readable dump of boundary lines and cell tables, for debugging."""
    N = partition.n_prosumers
    out = [
        f"price-plane partition: N={N}, rhs={partition.rhs!r}, "
        f"sum(u-mu)={partition.sum_net_demand!r}, apex={partition.apex!r}",
        "boundary lines (n * R_WP + (N - n) * R_LS = rhs):",
    ]
    for line in partition.lines:
        out.append(f"  n={line.n}: {line.n}*R_WP + {N - line.n}*R_LS = {line.rhs!r}")
    out.append("cells:")
    for cell in partition.cells:
        table = " ".join(
            f"n={n}:{reg.value}" for n, reg in enumerate(cell.cb_table)
        )
        planes = "; ".join(
            f"{h.a_wp:g}*R_WP + {h.a_ls:g}*R_LS {'>' if h.strict else '>='} {h.rhs!r}"
            for h in cell.half_planes
        )
        out.append(f"  {cell.label}: {planes}")
        out.append(f"    balancing price: {table}")
    return "\n".join(out)
