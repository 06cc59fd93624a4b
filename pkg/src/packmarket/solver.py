"""Per-cell convex pricing programs and the two-level daily sweep.

Inside one cell of the price-plane partition the balancing-price assignment
is fixed, so the expected social cost is a convex quadratic of the two
package prices.  The lower level minimizes it over the cell subject to

* the cell's half-planes and the diagonal case inequality,
* the package-price floors,
* ramp limits applied to the extreme balancing totals (the conservative
  pairing: the larger extreme against the ramp-up limit, the smaller against
  ramp-down), and
* the aggregator profit floor i_t >= 0, a quadratic constraint.

With two variables the linearly-constrained optimum is found exactly by
enumerating active sets (interior stationary point, one active constraint,
or a vertex).  If that optimum violates the profit floor, the search at
i_t = 0 is restored by a dense parameterized scan of the boundary curve plus
analytic curve/edge intersections, then cross-checked against a feasibility
grid over the cell's bounding box; a grid win beyond tolerance is reported
as a numeric warning.  The upper level keeps the cheapest feasible cell.

Hours chain through the settled balancing total: in planning mode the
selection-weighted expectation is carried forward, in replay mode the
realized scenario's total.  All operations are pure and deterministic;
identical inputs produce bit-identical solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from . import budget as budget_mod
from . import equilibrium
from . import objective as objective_mod
from . import partition as partition_mod
from .equilibrium import IncentivePair
from .errors import InfeasibleError, ParameterError
from .model import MarketInstance
from .partition import Case, Regulation, SubSpace
from .selection import Scenario

EPS_STRICT = 1e-9    # offset turning open half-planes into closed ones
FEAS_TOL = 1e-10     # scaled feasibility tolerance for exact candidates
BUDGET_TOL = 1e-9    # absolute slack allowed on the profit floor
GRID_POINTS = 400    # verification-grid resolution per axis
CURVE_POINTS = 2001  # scan resolution along the profit-floor boundary
REL_GAP = 1e-6       # relative tolerance for grid-vs-solver disagreement


@dataclass(frozen=True)
class Quad2:
    """q(r, s) = rr r^2 + rs r s + ss s^2 + lr r + ls s + c."""

    rr: float
    rs: float
    ss: float
    lr: float
    ls: float
    c: float

    def value(self, r, s):
        return (
            self.rr * r * r
            + self.rs * r * s
            + self.ss * s * s
            + self.lr * r
            + self.ls * s
            + self.c
        )

    def grad(self, r: float, s: float) -> np.ndarray:
        return np.array(
            [
                2.0 * self.rr * r + self.rs * s + self.lr,
                self.rs * r + 2.0 * self.ss * s + self.ls,
            ]
        )

    def hessian(self) -> np.ndarray:
        return np.array([[2.0 * self.rr, self.rs], [self.rs, 2.0 * self.ss]])


@dataclass(frozen=True)
class LinCon:
    """a_r * r + a_s * s >= rhs."""

    a_r: float
    a_s: float
    rhs: float
    family: str

    def slack(self, r, s):
        return self.a_r * r + self.a_s * s - self.rhs


@dataclass(frozen=True)
class SubProblem:
    subspace: SubSpace
    objective: Quad2
    budget: Quad2
    lincons: tuple[LinCon, ...]


@dataclass(frozen=True)
class CellResult:
    case: Case
    n_sigma: int
    status: str  # "optimal" | "infeasible"
    prices: Optional[IncentivePair]
    cost: Optional[float]
    budget_active: bool = False
    warning: Optional[str] = None
    reason: Optional[str] = None

    @property
    def label(self) -> str:
        return f"{self.case.value}[{self.n_sigma}]"


@dataclass(frozen=True)
class HourSolution:
    t: int
    prices: IncentivePair
    n_sigma_star: int
    case: Case
    expected_cost: float
    per_cell: tuple[CellResult, ...]
    x_prev_in: float
    x_prev_out: float


@dataclass(frozen=True)
class SinglePackageSolution:
    t: int
    r_wp: float
    expected_cost: float
    regulation: Regulation
    x_tot: float


def _shifted(rhs: float, strict: bool) -> float:
    return rhs + EPS_STRICT * max(1.0, abs(rhs)) if strict else rhs


def _price_lo(instance: MarketInstance, t: int, x_prev: float) -> float:
    """Price below which an extreme total would exceed the ramp-up limit."""
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    s = instance.sum_net_demand(t)
    return (N * b + d * (s - x_prev - instance.ramp_up(t))) / N


def _price_hi(instance: MarketInstance, t: int, x_prev: float) -> float:
    """Price above which an extreme total would undershoot the ramp-down limit."""
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    s = instance.sum_net_demand(t)
    return (N * b + d * (s - x_prev - instance.ramp_down(t))) / N


def ramp_price_window(
    instance: MarketInstance, t: int, x_prev: float
) -> tuple[float, float]:
    """Price interval keeping an extreme balancing total inside the ramp
    window.  Because the all-wholesale total depends only on the wholesale
    price and the all-lump-sum total only on the lump-sum price, the global
    ramp-feasible region is this interval applied to each price separately.
    """
    return _price_lo(instance, t, x_prev), _price_hi(instance, t, x_prev)


def build_subproblem(
    instance: MarketInstance,
    t: int,
    subspace: SubSpace,
    q_weights,
    x_prev: float,
) -> SubProblem:
    """Assemble one cell's quadratics and linear constraints."""
    q = np.asarray(q_weights, dtype=float)
    N = instance.n_prosumers
    if q.shape != (N + 1,):
        raise ParameterError(f"weights must have length {N + 1}, got {q.shape}")
    a = instance.gen.a
    coeffs = objective_mod.hour_coefficients(instance, t)
    gr, gs, h = objective_mod.total_coefficients(instance, t)
    phi = np.array(
        [
            coeffs.phi_up if subspace.cb(n) is Regulation.UP else coeffs.phi_down
            for n in range(N + 1)
        ]
    )
    obj = Quad2(
        rr=float((q * a * gr * gr).sum()),
        rs=float((q * a * 2.0 * gr * gs).sum()),
        ss=float((q * a * gs * gs).sum()),
        lr=float((q * (2.0 * a * gr * h + phi * gr)).sum()),
        ls=float((q * (2.0 * a * gs * h + phi * gs)).sum()),
        c=float((q * (a * h * h + phi * h + coeffs.psi)).sum()),
    )
    budget = Quad2(*budget_mod.budget_coefficients(instance, t, subspace, q))

    cons = [
        LinCon(h.a_wp, h.a_ls, _shifted(h.rhs, h.strict), "case" if k == 0 else "cell")
        for k, h in enumerate(subspace.half_planes)
    ]
    cons.append(LinCon(1.0, 0.0, instance.floor_wp(t), "floor_wp"))
    cons.append(LinCon(0.0, 1.0, instance.floor_ls(t), "floor_ls"))
    lo = _price_lo(instance, t, x_prev)
    hi = _price_hi(instance, t, x_prev)
    if subspace.case is Case.GE:
        # totals rise with the wholesale head-count: the all-wholesale total
        # is the upper envelope, the all-lump-sum total the lower one
        cons.append(LinCon(1.0, 0.0, lo, "ramp_up"))
        cons.append(LinCon(0.0, -1.0, -hi, "ramp_down"))
    else:
        cons.append(LinCon(0.0, 1.0, lo, "ramp_up"))
        cons.append(LinCon(-1.0, 0.0, -hi, "ramp_down"))
    return SubProblem(
        subspace=subspace, objective=obj, budget=budget, lincons=tuple(cons)
    )


def _feasible(cons: Sequence[LinCon], r: float, s: float, scale: float = 1.0) -> bool:
    for c in cons:
        if c.slack(r, s) < -FEAS_TOL * scale * max(1.0, abs(c.rhs)):
            return False
    return True


def _snap_feasible(
    cons: Sequence[LinCon], r: float, s: float
) -> tuple[float, float]:
    """Project a candidate onto any constraint it misses by rounding noise.

    Active-set candidates satisfy their defining equalities only to machine
    precision, which can leave a slack of about -1e-16 on a touching
    constraint; the shift applied here is of the same magnitude and keeps
    exact cell membership intact.
    """
    for _ in range(3):
        worst = 0.0
        for c in cons:
            slack = c.slack(r, s)
            if slack < 0.0:
                n2 = c.a_r**2 + c.a_s**2
                r -= slack * c.a_r / n2
                s -= slack * c.a_s / n2
                worst = min(worst, slack)
        if worst == 0.0:
            break
    return r, s


def _linear_candidates(sub: SubProblem) -> tuple[list[tuple[float, float]], list[tuple[float, float]]]:
    """All active-set candidates: returns (feasible points, feasible vertices)."""
    cons = sub.lincons
    points: list[tuple[float, float]] = []
    vertices: list[tuple[float, float]] = []

    H = sub.objective.hessian()
    g = np.array([sub.objective.lr, sub.objective.ls])
    # interior stationary point (the Hessian may be singular when the
    # selection distribution is degenerate)
    if abs(np.linalg.det(H)) > 1e-12 * max(1.0, abs(H).max()) ** 2:
        p = np.linalg.solve(H, -g)
        points.append((float(p[0]), float(p[1])))
    else:
        p, *_ = np.linalg.lstsq(H, -g, rcond=None)
        if np.linalg.norm(H @ p + g) <= 1e-9 * max(1.0, np.linalg.norm(g)):
            points.append((float(p[0]), float(p[1])))

    # one active constraint: stationary point along each line
    for c in cons:
        nrm = np.array([c.a_r, c.a_s])
        norm2 = float(nrm @ nrm)
        if norm2 == 0.0:
            continue
        p0 = nrm * (c.rhs / norm2)
        d = np.array([-c.a_s, c.a_r]) / np.sqrt(norm2)
        kappa = float(d @ H @ d)
        if kappa > 1e-14 * max(1.0, abs(H).max()):
            tau = -float((H @ p0 + g) @ d) / kappa
            p = p0 + tau * d
            points.append((float(p[0]), float(p[1])))

    # two active constraints: vertices
    for i in range(len(cons)):
        for j in range(i + 1, len(cons)):
            ci, cj = cons[i], cons[j]
            det = ci.a_r * cj.a_s - ci.a_s * cj.a_r
            scale = max(abs(ci.a_r), abs(ci.a_s)) * max(abs(cj.a_r), abs(cj.a_s))
            if abs(det) <= 1e-12 * max(1.0, scale):
                continue
            r = (ci.rhs * cj.a_s - ci.a_s * cj.rhs) / det
            s = (ci.a_r * cj.rhs - ci.rhs * cj.a_r) / det
            vertices.append((float(r), float(s)))

    feas_points = [p for p in points if _feasible(cons, *p)]
    feas_vertices = [p for p in vertices if _feasible(cons, *p)]
    return feas_points + feas_vertices, feas_vertices


def _empty_reason(sub: SubProblem) -> str:
    """Name the conflicting constraint families of an empty cell."""
    cons = sub.lincons
    lo_r = max(
        ((c.rhs / c.a_r, c.family) for c in cons if c.a_r > 0 and c.a_s == 0),
        default=(-np.inf, None),
    )
    hi_r = min(
        ((c.rhs / c.a_r, c.family) for c in cons if c.a_r < 0 and c.a_s == 0),
        default=(np.inf, None),
    )
    lo_s = max(
        ((c.rhs / c.a_s, c.family) for c in cons if c.a_s > 0 and c.a_r == 0),
        default=(-np.inf, None),
    )
    hi_s = min(
        ((c.rhs / c.a_s, c.family) for c in cons if c.a_s < 0 and c.a_r == 0),
        default=(np.inf, None),
    )
    if lo_r[0] > hi_r[0]:
        return f"empty linear region ({lo_r[1]} vs {hi_r[1]} on the wholesale price)"
    if lo_s[0] > hi_s[0]:
        return f"empty linear region ({lo_s[1]} vs {hi_s[1]} on the lump-sum price)"
    if sub.subspace.case is Case.GE and lo_r[0] > hi_s[0]:
        return f"empty linear region (case diagonal with {lo_r[1]} vs {hi_s[1]})"
    if sub.subspace.case is Case.LT and lo_s[0] > hi_r[0]:
        return f"empty linear region (case diagonal with {lo_s[1]} vs {hi_r[1]})"
    return "empty linear region (cell wedge incompatible with bounds)"


def _curve_roots(quad: Quad2, grid: np.ndarray, solve_for_s: bool):
    """Points on quad = 0 with one coordinate swept along ``grid``.

    Returns an array of (r, s) rows; both quadratic branches are included.
    """
    if solve_for_s:
        A = quad.ss
        B = quad.rs * grid + quad.ls
        C = quad.rr * grid * grid + quad.lr * grid + quad.c
    else:
        A = quad.rr
        B = quad.rs * grid + quad.lr
        C = quad.ss * grid * grid + quad.ls * grid + quad.c
    pts = []
    if abs(A) > 1e-14:
        disc = B * B - 4.0 * A * C
        ok = disc >= 0.0
        root = np.sqrt(np.where(ok, disc, 0.0))
        for sign in (1.0, -1.0):
            other = (-B + sign * root) / (2.0 * A)
            sel = np.where(ok)[0]
            pts.append(
                np.column_stack([grid[sel], other[sel]])
                if solve_for_s
                else np.column_stack([other[sel], grid[sel]])
            )
    else:
        nz = np.abs(B) > 1e-14
        other = np.where(nz, -C / np.where(nz, B, 1.0), np.nan)
        sel = np.where(nz)[0]
        pts.append(
            np.column_stack([grid[sel], other[sel]])
            if solve_for_s
            else np.column_stack([other[sel], grid[sel]])
        )
    return np.vstack(pts) if pts else np.empty((0, 2))


def _push_to_floor(quad: Quad2, r: float, s: float) -> tuple[float, float]:
    """Newton steps along the gradient driving quad(r, s) up to zero.

    Moves a near-boundary candidate by |quad| / |grad| — nanometres in price
    space — so the profit floor holds to its absolute tolerance without
    disturbing the linear constraints.
    """
    for _ in range(3):
        val = quad.value(r, s)
        if not np.isfinite(val) or val >= -0.1 * BUDGET_TOL:
            break
        g = quad.grad(r, s)
        n2 = float(g @ g)
        if n2 == 0.0:
            break
        r += -val * g[0] / n2
        s += -val * g[1] / n2
    return r, s


def _edge_curve_points(sub: SubProblem) -> list[tuple[float, float]]:
    """Intersections of the profit-floor boundary with each constraint line."""
    quad = sub.budget
    out: list[tuple[float, float]] = []
    for c in sub.lincons:
        nrm = np.array([c.a_r, c.a_s])
        norm2 = float(nrm @ nrm)
        if norm2 == 0.0:
            continue
        p0 = nrm * (c.rhs / norm2)
        d = np.array([-c.a_s, c.a_r]) / np.sqrt(norm2)
        qa = (
            quad.rr * d[0] ** 2 + quad.rs * d[0] * d[1] + quad.ss * d[1] ** 2
        )
        qb = float(quad.grad(p0[0], p0[1]) @ d)
        qc = quad.value(p0[0], p0[1])
        if abs(qa) > 1e-14:
            disc = qb * qb - 4.0 * qa * qc
            if disc < 0:
                continue
            root = np.sqrt(disc)
            taus = [(-qb + root) / (2.0 * qa), (-qb - root) / (2.0 * qa)]
        elif abs(qb) > 1e-14:
            taus = [-qc / qb]
        else:
            continue
        for tau in taus:
            p = p0 + tau * d
            out.append((float(p[0]), float(p[1])))
    return out


def _refine_on_curve(
    sub: SubProblem, r0: float, s0: float, span: float, solve_for_s: bool
) -> Optional[tuple[float, float]]:
    """Local 1-D minimization of the objective along one branch of the
    profit-floor boundary around a scan point."""
    quad = sub.budget
    if solve_for_s:
        A = quad.ss
        B0 = quad.rs * r0 + quad.ls
    else:
        A = quad.rr
        B0 = quad.rs * s0 + quad.lr
    fixed0, free0 = (r0, s0) if solve_for_s else (s0, r0)
    if abs(A) > 1e-14:
        branch = np.sign(2.0 * A * free0 + B0) or 1.0
    else:
        branch = 0.0

    def free_at(fixed: float) -> float:
        if solve_for_s:
            B = quad.rs * fixed + quad.ls
            C = quad.rr * fixed * fixed + quad.lr * fixed + quad.c
        else:
            B = quad.rs * fixed + quad.lr
            C = quad.ss * fixed * fixed + quad.ls * fixed + quad.c
        if abs(A) > 1e-14:
            disc = B * B - 4.0 * A * C
            if disc < 0:
                return np.nan
            return (-B + branch * np.sqrt(disc)) / (2.0 * A)
        if abs(B) > 1e-14:
            return -C / B
        return np.nan

    big = 1e30  # finite penalty keeps the bounded minimizer's arithmetic clean

    def f(fixed: float) -> float:
        free = free_at(fixed)
        if not np.isfinite(free):
            return big
        r, s = (fixed, free) if solve_for_s else (free, fixed)
        if not _feasible(sub.lincons, r, s, scale=10.0):
            return big
        return float(sub.objective.value(r, s))

    res = optimize.minimize_scalar(
        f,
        bounds=(fixed0 - span, fixed0 + span),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if not np.isfinite(res.fun) or res.fun >= big:
        return None
    free = free_at(float(res.x))
    if not np.isfinite(free):
        return None
    return (float(res.x), float(free)) if solve_for_s else (float(free), float(res.x))


def solve_cell(sub: SubProblem) -> CellResult:
    """Minimize the cell's expected cost over its full constraint set."""
    cell = sub.subspace
    candidates, vertices = _linear_candidates(sub)
    if not candidates:
        return CellResult(
            case=cell.case,
            n_sigma=cell.n_sigma,
            status="infeasible",
            prices=None,
            cost=None,
            reason=_empty_reason(sub),
        )
    ranked = sorted(
        candidates, key=lambda p: (float(sub.objective.value(*p)), p[0], p[1])
    )
    best = ranked[0]
    if sub.budget.value(*best) >= -BUDGET_TOL:
        best = _snap_feasible(sub.lincons, *best)
        return CellResult(
            case=cell.case,
            n_sigma=cell.n_sigma,
            status="optimal",
            prices=IncentivePair(best[0], best[1]),
            cost=float(sub.objective.value(*best)),
        )

    # profit floor is violated at the plain QP optimum: restore on i_t = 0
    box = _bounding_box(vertices)
    pool: list[tuple[float, float]] = [
        p for p in ranked if sub.budget.value(*p) >= -BUDGET_TOL
    ]
    for p in _edge_curve_points(sub):
        p = _push_to_floor(sub.budget, *p)
        if _feasible(sub.lincons, *p) and sub.budget.value(*p) >= -BUDGET_TOL:
            pool.append(p)
    scan_best: Optional[tuple[tuple[float, float], bool, float]] = None
    if box is not None:
        (r_lo, r_hi), (s_lo, s_hi) = box
        for solve_for_s, lo, hi in ((True, r_lo, r_hi), (False, s_lo, s_hi)):
            grid = np.linspace(lo, hi, CURVE_POINTS)
            pts = _curve_roots(sub.budget, grid, solve_for_s)
            if pts.size == 0:
                continue
            ok = np.ones(len(pts), dtype=bool)
            for c in sub.lincons:
                ok &= c.slack(pts[:, 0], pts[:, 1]) >= -FEAS_TOL * max(
                    1.0, abs(c.rhs)
                )
            pts = pts[ok]
            if len(pts) == 0:
                continue
            vals = sub.objective.value(pts[:, 0], pts[:, 1])
            k = int(np.argmin(vals))
            cand = (float(pts[k, 0]), float(pts[k, 1]))
            span = (hi - lo) / (CURVE_POINTS - 1) if hi > lo else 1.0
            if scan_best is None or vals[k] < sub.objective.value(*scan_best[0]):
                scan_best = (cand, solve_for_s, span)
    if scan_best is not None:
        cand, solve_for_s, span = scan_best
        refined = _refine_on_curve(sub, cand[0], cand[1], span, solve_for_s)
        for p in (cand, refined):
            if p is None:
                continue
            p = _push_to_floor(sub.budget, *p)
            if (
                _feasible(sub.lincons, *p)
                and sub.budget.value(*p) >= -BUDGET_TOL
            ):
                pool.append(p)

    warning = None
    if not pool:
        # second phase of infeasibility detection: a budget-feasible pocket
        # can be smaller than the boundary-scan resolution, so sample the
        # cell grid before giving up
        grid_pt = None
        if box is not None:
            grid_pt, grid_val = _grid_best(sub, box)
        if grid_pt is None:
            return CellResult(
                case=cell.case,
                n_sigma=cell.n_sigma,
                status="infeasible",
                prices=None,
                cost=None,
                reason="profit floor unattainable inside the cell",
            )
        pool.append(grid_pt)
        warning = "profit-floor region found only by the verification grid"
    pool.sort(key=lambda p: (float(sub.objective.value(*p)), p[0], p[1]))
    chosen = _snap_feasible(sub.lincons, *pool[0])
    cost = float(sub.objective.value(*chosen))
    if box is not None:
        grid_pt, grid_val = _grid_best(sub, box)
        if grid_pt is not None and grid_val < cost - REL_GAP * max(1.0, abs(cost)):
            warning = (
                f"verification grid improved the restored optimum by "
                f"{cost - grid_val:.6g}"
            )
            chosen, cost = grid_pt, float(grid_val)
    return CellResult(
        case=cell.case,
        n_sigma=cell.n_sigma,
        status="optimal",
        prices=IncentivePair(chosen[0], chosen[1]),
        cost=cost,
        budget_active=True,
        warning=warning,
    )


def _bounding_box(
    vertices: Sequence[tuple[float, float]]
) -> Optional[tuple[tuple[float, float], tuple[float, float]]]:
    if not vertices:
        return None
    rs = np.array(vertices)
    return (
        (float(rs[:, 0].min()), float(rs[:, 0].max())),
        (float(rs[:, 1].min()), float(rs[:, 1].max())),
    )


def _grid_best(
    sub: SubProblem, box: tuple[tuple[float, float], tuple[float, float]]
) -> tuple[Optional[tuple[float, float]], float]:
    (r_lo, r_hi), (s_lo, s_hi) = box
    r = np.linspace(r_lo, r_hi, GRID_POINTS)
    s = np.linspace(s_lo, s_hi, GRID_POINTS)
    rr, ss = np.meshgrid(r, s, indexing="ij")
    ok = np.ones(rr.shape, dtype=bool)
    for c in sub.lincons:
        ok &= c.slack(rr, ss) >= 0.0
    ok &= sub.budget.value(rr, ss) >= -BUDGET_TOL
    if not ok.any():
        return None, np.inf
    vals = np.where(ok, sub.objective.value(rr, ss), np.inf)
    k = int(np.argmin(vals))
    i, j = np.unravel_index(k, vals.shape)
    return (float(rr[i, j]), float(ss[i, j])), float(vals[i, j])


def solve_hour(
    instance: MarketInstance, t: int, q_weights, x_prev: float
) -> HourSolution:
    """Sweep all cells and keep the cheapest feasible price pair.

    Ties break toward the lowest inversion point, the R_LS >= R_WP family
    first, so reporting is deterministic.
    """
    q = np.asarray(q_weights, dtype=float)
    part = partition_mod.build_partition(instance, t)
    records: list[CellResult] = []
    best: Optional[CellResult] = None
    best_key = None
    for cell in part.cells:
        sub = build_subproblem(instance, t, cell, q, x_prev)
        res = solve_cell(sub)
        records.append(res)
        if res.status != "optimal":
            continue
        key = (res.cost, res.n_sigma, 0 if res.case is Case.GE else 1)
        if best_key is None or key < best_key:
            best, best_key = res, key
    if best is None:
        tally: dict[str, int] = {}
        for res in records:
            tally[res.reason or "unknown"] = tally.get(res.reason or "unknown", 0) + 1
        detail = "; ".join(f"{v} cells: {k}" for k, v in sorted(tally.items()))
        raise InfeasibleError(t, f"all {len(records)} cells infeasible ({detail})")
    gr, gs, h = objective_mod.total_coefficients(instance, t)
    x_totals = gr * best.prices.r_wp + gs * best.prices.r_ls + h
    return HourSolution(
        t=t,
        prices=best.prices,
        n_sigma_star=best.n_sigma,
        case=best.case,
        expected_cost=float(best.cost),
        per_cell=tuple(records),
        x_prev_in=float(x_prev),
        x_prev_out=float(q @ x_totals),
    )


def solve_day(
    instance: MarketInstance,
    q_weights,
    realized: Optional[Sequence[Scenario]] = None,
    x_prev: Optional[float] = None,
) -> list[HourSolution]:
    """Chain hour solves over the full horizon.

    ``realized`` switches the ramp carry-over from the planning expectation
    to the given scenarios' settled totals (replay mode); it must then hold
    one scenario per hour.
    """
    if realized is not None and len(realized) != instance.horizon:
        raise ParameterError(
            f"replay needs one scenario per hour ({instance.horizon}), "
            f"got {len(realized)}"
        )
    carry = instance.ea.x_prev_init if x_prev is None else float(x_prev)
    out: list[HourSolution] = []
    for t in instance.hours():
        sol = solve_hour(instance, t, q_weights, carry)
        if realized is not None:
            ne = equilibrium.nash_equilibrium(
                instance, t, realized[t - 1], sol.prices
            )
            # record the realized carry so x_prev_out is always the quantity
            # actually handed to the next hour
            sol = replace(sol, x_prev_out=ne.x_tot)
        out.append(sol)
        carry = sol.x_prev_out
    return out


def solve_hour_single_package(
    instance: MarketInstance, t: int, x_prev: float
) -> SinglePackageSolution:
    """Wholesale-only pricing: every prosumer takes the wholesale package.

    One price variable remains, the balancing total is the all-wholesale
    extreme, and both the objective and the profit floor are univariate
    quadratics, so each sign regime solves in closed form.
    """
    N = instance.n_prosumers
    a, b = instance.gen.a, instance.gen.b
    d = a * (N + 1)
    s = instance.sum_net_demand(t)
    coeffs = objective_mod.hour_coefficients(instance, t)
    m = budget_mod.min_net_demand(instance, t)
    up, down = instance.up_price(t), instance.down_price(t)

    lo = max(instance.floor_wp(t), _price_lo(instance, t, x_prev))
    hi = _price_hi(instance, t, x_prev)
    if lo > hi:
        raise InfeasibleError(
            t, "ramp window excludes every feasible wholesale price"
        )
    r_zero = coeffs.rhs / N  # balancing total crosses zero here

    def x_of(r: float) -> float:
        return N * (b - r) / d + s

    segments = [
        (Regulation.UP, up, lo, min(hi, r_zero)),
        (Regulation.DOWN, down, max(lo, _shifted(r_zero, strict=True)), hi),
    ]
    best: Optional[tuple[float, float, Regulation]] = None
    for reg, cb, seg_lo, seg_hi in segments:
        if seg_lo > seg_hi:
            continue
        # profit floor: concave quadratic of r, nonnegative between its roots
        qa = -N / d
        qb = N * b / d + N * m + cb * N / d
        qc = -cb * (N * b / d + s)
        peak_r = -qb / (2.0 * qa)
        peak = qa * peak_r**2 + qb * peak_r + qc
        if peak < -BUDGET_TOL:
            continue
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            root = np.sqrt(disc)
            b_lo = min((-qb + root) / (2.0 * qa), (-qb - root) / (2.0 * qa))
            b_hi = max((-qb + root) / (2.0 * qa), (-qb - root) / (2.0 * qa))
        else:
            b_lo, b_hi = peak_r, peak_r
        f_lo, f_hi = max(seg_lo, b_lo), min(seg_hi, b_hi)
        if f_lo > f_hi:
            continue
        phi = coeffs.phi_up if reg is Regulation.UP else coeffs.phi_down
        # cost vertex sits where the balancing total equals -phi / (2 a)
        vertex = (N * b + d * (s + phi / (2.0 * a))) / N
        r_star = min(max(vertex, f_lo), f_hi)
        x = x_of(r_star)
        cost = a * x**2 + phi * x + coeffs.psi
        if best is None or cost < best[0]:
            best = (float(cost), float(r_star), reg)
    if best is None:
        raise InfeasibleError(
            t, "profit floor unattainable in single-package mode"
        )
    cost, r_star, reg = best
    return SinglePackageSolution(
        t=t,
        r_wp=r_star,
        expected_cost=cost,
        regulation=reg,
        x_tot=x_of(r_star),
    )
