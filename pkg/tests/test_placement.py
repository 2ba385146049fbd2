import numpy as np
import pytest

from oracles import running_mean_prefix
from rsuplan.baselines import solve_exhaustive
from rsuplan.coverage import evaluate_deployment
from rsuplan.placement import (
    InfeasibleError,
    compute_service_lists,
    phase1,
    phase2,
    phase3,
    solve_agile,
)


@pytest.mark.parametrize("th", [None, -95.0, -84.0, -75.0])
def test_service_lists_are_longest_prefix(plus_table, th):
    lists = compute_service_lists(plus_table, th)
    for i in range(plus_table.n_candidates):
        vals = [v for _, v in plus_table.los_tiles(i)]
        want = len(vals) if th is None else running_mean_prefix(vals, th)
        assert len(lists.tiles[i]) == want
        got = plus_table.rss[i, lists.tiles[i]]
        assert np.all(np.diff(got) <= 0)
        assert lists.mask[i].sum() == want


@pytest.mark.parametrize("tau", [0.85, 0.9, 0.99])
@pytest.mark.parametrize("th", [None, -84.0])
def test_agile_feasible_on_plus(plus_table, tau, th):
    dep = solve_agile(plus_table, tau, th)
    rep = evaluate_deployment(plus_table, dep.chosen, tau, th)
    assert rep.feasible
    assert dep.objective == len(dep.chosen)
    assert set(dep.phase_added) == set(dep.chosen)
    assert set(dep.phase_added.values()) <= {1, 2, 3}


def test_agile_close_to_optimum_on_plus(plus_table):
    opt = solve_exhaustive(plus_table, 0.9, -84.0).objective
    assert opt <= solve_agile(plus_table, 0.9, -84.0).objective <= opt + 1


def test_phase3_never_worsens(grid_table):
    lists = compute_service_lists(grid_table, -84.0)
    dep = phase1(grid_table, lists, 0.9, -84.0)
    if not dep.report.feasible:
        dep = phase2(grid_table, dep, 0.9, -84.0)
    before = dep.objective
    after = phase3(grid_table, dep, 0.9, -84.0)
    assert after.objective <= before
    assert after.report.feasible


def test_infeasible_threshold(plus_table):
    with pytest.raises(InfeasibleError) as exc:
        solve_agile(plus_table, 0.9, -40.0)
    assert exc.value.report is not None
    assert not exc.value.report.feasible


def test_tau_zero_gives_empty(plus_table):
    dep = solve_agile(plus_table, 0.0, -84.0)
    assert dep.objective == 0


def test_agile_grid_monotone_tau(grid_table):
    sizes = [solve_agile(grid_table, t, -84.0).objective for t in (0.85, 0.9, 0.95, 0.99)]
    assert sizes == sorted(sizes)


def test_agile_deterministic(grid_table):
    a = solve_agile(grid_table, 0.9, -84.0)
    b = solve_agile(grid_table, 0.9, -84.0)
    assert a.chosen == b.chosen and a.phase_added == b.phase_added
