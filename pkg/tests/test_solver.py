import numpy as np
import pytest

from packmarket import budget, equilibrium, objective, selection, settlement, solver
from packmarket.equilibrium import IncentivePair
from packmarket.errors import InfeasibleError
from packmarket.partition import Case, build_partition
from packmarket.selection import Scenario, SelectionModel

from conftest import (
    build_instance,
    reference_day_instance,
    random_feasible_instance,
    single_hour_instance,
)


def uniform_weights(n):
    return np.full(n + 1, 1.0 / (n + 1))


def global_grid_best(inst, t, q, x_prev, points=400):
    """Independent oracle: densest feasible point of the whole price plane.

    Ramp feasibility reduces to a box on the two prices because each extreme
    total depends on one price only; the balancing price is resolved by sign
    at every point.
    """
    lo, hi = solver.ramp_price_window(inst, t, x_prev)
    r_lo = max(inst.floor_wp(t), lo)
    s_lo = max(inst.floor_ls(t), lo)
    if r_lo > hi or s_lo > hi:
        return None, np.inf
    r = np.linspace(r_lo, hi, points)
    s = np.linspace(s_lo, hi, points)
    rr, ss = np.meshgrid(r, s, indexing="ij")
    cost = objective.expected_cost_by_sign(inst, t, rr.ravel(), ss.ravel(), q)
    feas = budget.profit_floor_by_sign(inst, t, rr.ravel(), ss.ravel(), q) >= -1e-9
    if not feas.any():
        return None, np.inf
    vals = np.where(feas, cost, np.inf)
    k = int(np.argmin(vals))
    return (float(rr.ravel()[k]), float(ss.ravel()[k])), float(vals[k])


def assert_solution_feasible(inst, t, sol, x_prev):
    assert sol.prices.r_wp >= inst.floor_wp(t) - 1e-9
    assert sol.prices.r_ls >= inst.floor_ls(t) - 1e-9
    x0, xn = objective.extreme_totals(inst, t, sol.prices)
    window_lo = x_prev + inst.ramp_down(t)
    window_hi = x_prev + inst.ramp_up(t)
    tol = 1e-7 * max(1.0, abs(window_hi), abs(window_lo))
    for x in (x0, xn):
        assert window_lo - tol <= x <= window_hi + tol
    part = build_partition(inst, t)
    cell = [
        c for c in part.cells if c.case is sol.case and c.n_sigma == sol.n_sigma_star
    ][0]
    assert cell.contains(sol.prices)
    q = selection.weights(SelectionModel(tuple(inst.qs())))
    pb = budget.profit_floor(inst, t, sol.prices, cell, q)
    assert pb.i_t >= -1e-9


def test_interior_optimum_hits_the_stationary_point():
    # wide bounds, equal regulation prices: the cost is minimized where every
    # head-count total sits at the common vertex, i.e. on the diagonal
    inst = build_instance(
        [[7.5]] * 2, [[5.0]] * 2, a=1.0, b=0.0, up=10.0, down=10.0,
        floor_wp=1.0, floor_ls=1.0, ramp_up=1000.0, ramp_down=-1000.0,
    )
    q = uniform_weights(2)
    sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
    # phi = 10 - 2 * 1 * 5 - 0 = 0, so the vertex is x = 0: prices at the apex
    part = build_partition(inst, 1)
    assert sol.prices.r_wp == pytest.approx(part.apex, abs=1e-7)
    assert sol.prices.r_ls == pytest.approx(part.apex, abs=1e-7)
    assert sol.expected_cost == pytest.approx(
        objective.hour_coefficients(inst, 1).psi, abs=1e-7
    )


def test_floors_bind_when_cost_wants_cheaper_prices():
    # a cheap up-regulation price makes being short attractive: the cost
    # decreases toward larger totals, so both floors bind at the corner
    inst = build_instance(
        [[30.0], [30.0]], [[5.0], [5.0]], a=0.2, b=0.5, up=5.0, down=2.0,
        floor_wp=10.0, floor_ls=10.0, ramp_up=1000.0, ramp_down=-1000.0,
    )
    q = uniform_weights(2)
    sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
    assert sol.prices.r_wp == pytest.approx(10.0, abs=1e-9)
    assert sol.prices.r_ls == pytest.approx(10.0, abs=1e-9)


def test_no_grid_point_beats_the_solver():
    rng = np.random.default_rng(101)
    for _ in range(10):
        inst = random_feasible_instance(rng)
        q = selection.weights(SelectionModel(tuple(inst.qs())))
        sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
        assert_solution_feasible(inst, 1, sol, x_prev=0.0)
        _, grid_val = global_grid_best(inst, 1, q, x_prev=0.0)
        assert grid_val >= sol.expected_cost - 1e-6 * max(1.0, abs(sol.expected_cost))


def test_deterministic_solutions():
    rng = np.random.default_rng(102)
    inst = random_feasible_instance(rng)
    q = selection.weights(SelectionModel(tuple(inst.qs())))
    a = solver.solve_hour(inst, 1, q, x_prev=0.0)
    b = solver.solve_hour(inst, 1, q, x_prev=0.0)
    assert a == b  # dataclass equality is exact on every float


def test_day_chaining_carries_the_expected_total():
    u, mu = [], []
    rng = np.random.default_rng(103)
    for i in range(3):
        u.append([14.0 + 0.2 * i + 0.3 * float(rng.uniform()) for _ in range(4)])
        mu.append([4.0 + 0.1 * i for _ in range(4)])
    inst = build_instance(
        u, mu, a=0.2, b=0.5, up=30.0, down=20.0, floor_wp=8.0, floor_ls=8.0,
        ramp_up=15.0, ramp_down=-15.0,
    )
    q = selection.weights(SelectionModel(tuple(inst.qs())))
    sols = solver.solve_day(inst, q)
    assert [s.t for s in sols] == [1, 2, 3, 4]
    assert sols[0].x_prev_in == inst.ea.x_prev_init
    for prev, cur in zip(sols, sols[1:]):
        assert cur.x_prev_in == prev.x_prev_out
    # planning carry-over is the selection-weighted total at the chosen prices
    gr, gs, h = objective.total_coefficients(inst, 1)
    x = gr * sols[0].prices.r_wp + gs * sols[0].prices.r_ls + h
    assert sols[0].x_prev_out == pytest.approx(float(q @ x), abs=1e-12)


def test_day_chaining_replay_mode():
    u = [[14.0] * 3, [14.5] * 3]
    mu = [[4.0] * 3, [4.2] * 3]
    inst = build_instance(
        u, mu, a=0.3, b=0.5, up=30.0, down=20.0, floor_wp=8.0, floor_ls=8.0,
        ramp_up=20.0, ramp_down=-20.0,
    )
    q = selection.weights(SelectionModel(tuple(inst.qs())))
    realized = [
        Scenario(frozenset({1})),
        Scenario(frozenset({1, 2})),
        Scenario(frozenset()),
    ]
    sols = solver.solve_day(inst, q, realized=realized)
    carry = inst.ea.x_prev_init
    for t, sol in enumerate(sols, start=1):
        assert sol.x_prev_in == pytest.approx(carry, abs=1e-12)
        ne = equilibrium.nash_equilibrium(inst, t, realized[t - 1], sol.prices)
        # the record carries the realized total, not the planning expectation
        assert sol.x_prev_out == pytest.approx(ne.x_tot, abs=1e-12)
        carry = ne.x_tot


def test_infeasible_hour_names_constraint_families():
    # tiny net demand with high floors: any admissible price pushes the
    # community's injection past the ramp-down window
    inst = single_hour_instance(
        [1.0, 1.0], a=0.2, b=0.5, floor_wp=10.0, floor_ls=10.0,
        ramp_up=10.0, ramp_down=-10.0, up=30.0, down=20.0,
    )
    q = uniform_weights(2)
    with pytest.raises(InfeasibleError) as err:
        solver.solve_hour(inst, 1, q, x_prev=0.0)
    message = str(err.value)
    assert "hour 1" in message
    assert "ramp_down" in message or "profit floor" in message


def test_collapsed_feasible_set_pins_the_diagonal():
    # floors meet the ramp-down price cap exactly: the only feasible point is
    # on the diagonal
    a, b, n = 1.0, 0.0, 2
    d = a * (n + 1)
    floor = 2.0
    s_net = -4.0  # wind-rich community
    # price cap from the ramp-down limit: [n b + d (s - x_prev - down)] / n
    down = s_net - floor * n / d  # makes the cap equal the floor
    assert down < 0
    inst = build_instance(
        [[1.0], [1.0]], [[3.0], [3.0]], a=a, b=b, cap=10.0,
        up=5.0, down=2.0, floor_wp=floor, floor_ls=floor,
        ramp_up=50.0, ramp_down=down,
    )
    q = uniform_weights(2)
    sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
    assert sol.prices.r_wp == pytest.approx(floor, abs=1e-9)
    assert sol.prices.r_ls == pytest.approx(floor, abs=1e-9)
    assert sol.case is Case.GE


def test_budget_restoration_stays_optimal():
    # heterogeneous community where the plain optimum violates the profit
    # floor: the restored solution must still match the grid oracle
    rng = np.random.default_rng(104)
    found = 0
    for _ in range(40):
        inst = random_feasible_instance(rng, require_hetero=True)
        q = selection.weights(SelectionModel(tuple(inst.qs())))
        sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
        if not any(c.budget_active for c in sol.per_cell if c.status == "optimal"):
            continue
        found += 1
        assert_solution_feasible(inst, 1, sol, x_prev=0.0)
        _, grid_val = global_grid_best(inst, 1, q, x_prev=0.0)
        assert grid_val >= sol.expected_cost - 1e-6 * max(1.0, abs(sol.expected_cost))
        if found >= 5:
            break
    assert found >= 1, "no draw exercised the budget-restoration path"


def test_single_package_matches_closed_form_geometry():
    inst = build_instance(
        [[14.0]] * 3, [[4.0]] * 3, a=0.3, b=0.5, up=25.0, down=15.0,
        floor_wp=8.0, floor_ls=8.0, ramp_up=40.0, ramp_down=-40.0,
    )
    sp = solver.solve_hour_single_package(inst, 1, x_prev=0.0)
    # the returned price must reproduce its own total and cost
    assert sp.x_tot == pytest.approx(
        equilibrium.x_n_tot(inst, 1, 3, IncentivePair(sp.r_wp, sp.r_wp)), abs=1e-9
    )
    assert sp.r_wp >= 8.0 - 1e-12
    window_lo = inst.ramp_down(1)
    window_hi = inst.ramp_up(1)
    assert window_lo - 1e-7 <= sp.x_tot <= window_hi + 1e-7
    # brute scan of the one-dimensional problem
    lo, hi = solver.ramp_price_window(inst, 1, 0.0)
    grid = np.linspace(max(8.0, lo), hi, 100001)
    cost = objective.expected_cost_by_sign(
        inst, 1, grid, grid, np.array([0.0, 0.0, 0.0, 1.0])
    )
    feas = (
        budget.profit_floor_by_sign(inst, 1, grid, grid, np.array([0.0, 0.0, 0.0, 1.0]))
        >= -1e-9
    )
    best = float(np.min(np.where(feas, cost, np.inf)))
    assert sp.expected_cost <= best + 1e-6 * max(1.0, abs(best))


def test_single_package_beats_the_baseline_when_it_contains_it():
    # identical prosumers keep the profit floor tight at the baseline price,
    # so the baseline point is feasible and the optimized cost dominates
    inst = build_instance(
        [[20.0]] * 3, [[4.0]] * 3, a=0.3, b=0.5, up=12.0, down=6.0,
        floor_wp=5.0, floor_ls=5.0, ramp_up=80.0, ramp_down=-80.0,
    )
    x_hat, usm_cost = settlement.usm_baseline(inst, 1)
    assert x_hat >= 0.0
    sp = solver.solve_hour_single_package(inst, 1, x_prev=0.0)
    assert sp.expected_cost <= usm_cost + 1e-9


def test_single_package_infeasible_ramp_window():
    # a large settled total forces prices far below the floor to keep ramping
    inst = build_instance(
        [[5.0]] * 2, [[4.0]] * 2, a=0.2, b=0.5, floor_wp=10.0, floor_ls=10.0,
        ramp_up=1.0, ramp_down=-1.0,
    )
    with pytest.raises(InfeasibleError):
        solver.solve_hour_single_package(inst, 1, x_prev=50.0)


def test_tie_breaks_prefer_low_inversion_point_and_ge():
    # symmetric costs across the diagonal: the reported winner is the
    # deterministic representative
    inst = build_instance(
        [[7.5]] * 2, [[5.0]] * 2, a=1.0, b=0.0, up=10.0, down=10.0,
        floor_wp=1.0, floor_ls=1.0, ramp_up=1000.0, ramp_down=-1000.0,
    )
    q = uniform_weights(2)
    sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
    equal = [
        c
        for c in sol.per_cell
        if c.status == "optimal" and c.cost == sol.expected_cost
    ]
    best = min(equal, key=lambda c: (c.n_sigma, 0 if c.case is Case.GE else 1))
    assert (sol.case, sol.n_sigma_star) == (best.case, best.n_sigma)


def test_infeasible_verdicts_are_genuine():
    # when every cell is declared infeasible, no grid point with a safely
    # positive profit floor may exist inside the floor/ramp box
    rng = np.random.default_rng(105)
    checked = 0
    for _ in range(60):
        inst = random_valid_instance_local(rng)
        q = selection.weights(SelectionModel(tuple(inst.qs())))
        try:
            solver.solve_hour(inst, 1, q, x_prev=0.0)
            continue
        except InfeasibleError:
            pass
        checked += 1
        lo, hi = solver.ramp_price_window(inst, 1, 0.0)
        r_lo = max(inst.floor_wp(1), lo)
        s_lo = max(inst.floor_ls(1), lo)
        if r_lo > hi or s_lo > hi:
            continue  # empty box: trivially infeasible
        r = np.linspace(r_lo, hi, 250)
        s = np.linspace(s_lo, hi, 250)
        rr, ss = np.meshgrid(r, s, indexing="ij")
        i_t = budget.profit_floor_by_sign(inst, 1, rr.ravel(), ss.ravel(), q)
        assert i_t.max() < 1e-6, "solver reported infeasible but a margin exists"
        if checked >= 12:
            break
    assert checked >= 3


def random_valid_instance_local(rng):
    from conftest import random_valid_instance

    return random_valid_instance(rng)


def test_point_mass_selection_matches_single_package_cost():
    # a certain all-wholesale selection makes the objective flat in the
    # lump-sum price (a singular Hessian); the optimal cost must agree with
    # the dedicated one-variable solver
    inst = build_instance(
        [[14.0]] * 3, [[4.0]] * 3, a=0.3, b=0.5, up=25.0, down=15.0,
        floor_wp=8.0, floor_ls=8.0, ramp_up=40.0, ramp_down=-40.0,
    )
    q = np.array([0.0, 0.0, 0.0, 1.0])
    sol = solver.solve_hour(inst, 1, q, x_prev=0.0)
    sp = solver.solve_hour_single_package(inst, 1, x_prev=0.0)
    assert sol.expected_cost == pytest.approx(sp.expected_cost, rel=1e-9)


def test_reference_day_solves_and_reports():
    inst = reference_day_instance()
    q = selection.weights(SelectionModel(tuple(inst.qs())))
    sols = solver.solve_day(inst, q)
    assert len(sols) == 24
    for sol in sols:
        assert np.isfinite(sol.expected_cost)
        assert sol.prices.r_wp >= 10.0 - 1e-9
        assert sol.prices.r_ls >= 10.0 - 1e-9
