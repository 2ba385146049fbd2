import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_coverage, hand_rss, sampled_blocked
from rsuplan.coverage import (
    CoverageError,
    build_grid,
    cdf_csv,
    evaluate_deployment,
    required_tiles,
    rss_cdf,
    tiles_csv,
    top_mean,
)


def test_plus_grid(plus_scene):
    grid = build_grid(plus_scene, 4.0, 0.0)
    assert grid.shape == (25, 25)
    # 3 columns and 3 rows of centers fall on the 10 m arms
    assert grid.n_reference == 3 * 25 + 3 * 25 - 9


def test_grid_margin(grid_scene):
    grid = build_grid(grid_scene, 4.0, 50.0)
    assert grid.area_of_interest == (50.0, 50.0, 460.0, 460.0)
    assert grid.shape == (102, 102)
    with pytest.raises(CoverageError):
        build_grid(grid_scene, 4.0, 300.0)
    with pytest.raises(CoverageError):
        build_grid(grid_scene, 0.0, 0.0)


@pytest.mark.parametrize("n, tau, k", [(3600, 0.9, 3240), (10, 0.85, 9), (7, 0.0, 0), (7, 1.0, 7), (2304, 0.99, 2281)])
def test_required_tiles(n, tau, k):
    assert required_tiles(n, tau) == k
    assert k == math.ceil(n * tau - 1e-9)


def test_required_tiles_range():
    with pytest.raises(CoverageError):
        required_tiles(10, 1.5)


def test_top_mean():
    v = np.array([-90.0, -70.0, -np.inf, -80.0])
    assert top_mean(v, 2) == pytest.approx(-75.0)
    assert top_mean(v, 4) == -np.inf
    assert math.isnan(top_mean(v, 0))
    rows = np.stack([v, v[::-1]])
    assert np.array_equal(top_mean(rows, 3), [top_mean(v, 3)] * 2)


def test_visibility_against_oracles(plus_scene, plus_table):
    rings = [b.vertices for b in plus_scene.buildings]
    ref = plus_table.grid.ref_xy
    rng = np.random.default_rng(0)
    for i in rng.choice(plus_table.n_candidates, 4, replace=False):
        c = plus_table.candidates[i]
        for n in rng.choice(len(ref), 25, replace=False):
            a, b = np.array(c.position), ref[n]
            rss = plus_table.rss[i, n]
            if sampled_blocked(a, b, rings):
                assert rss == -np.inf
            else:
                assert rss == pytest.approx(hand_rss(float(np.hypot(*(b - a)))), abs=1e-9)


def test_brute_coverage_matches(plus_scene, plus_table):
    rings = [b.vertices for b in plus_scene.buildings]
    ids = [0, 5, 9]
    sites = [np.array(plus_table.candidates[i].position) for i in ids]
    tiles = list(plus_table.grid.ref_xy)
    want = brute_coverage(rings, sites, tiles, lambda s, t: sampled_blocked(s, t, rings))
    rep = evaluate_deployment(plus_table, ids, 0.5, None)
    assert rep.covered_count == want


def test_report_fields(plus_table):
    rep = evaluate_deployment(plus_table, range(plus_table.n_candidates), 0.9, -60.0)
    assert rep.covered_count == plus_table.n_tiles
    assert rep.feasible_5b
    assert not rep.feasible_5c
    assert rep.coverage_rate == 1.0
    off = evaluate_deployment(plus_table, [], 0.9, None)
    assert off.covered_count == 0 and not off.feasible_5b and off.feasible_5c
    s = rep.summary()
    assert s["required_tiles"] == required_tiles(plus_table.n_tiles, 0.9)


def test_unknown_id(plus_table):
    with pytest.raises(CoverageError, match="unknown"):
        evaluate_deployment(plus_table, [999], 0.9, None)


def test_tau_zero_trivially_feasible(plus_table):
    rep = evaluate_deployment(plus_table, [], 0.0, -50.0)
    assert rep.required == 0
    assert rep.feasible


def test_exports(plus_table):
    rep = evaluate_deployment(plus_table, [0, 1], 0.5, None)
    lines = tiles_csv(plus_table, rep).splitlines()
    assert lines[0] == "x,y,best_rss_dbm,covered"
    assert len(lines) == plus_table.n_tiles + 1
    cdf = rss_cdf(rep)
    assert len(cdf) == rep.covered_count
    assert cdf[-1][1] == 1.0
    assert all(a[0] <= b[0] for a, b in zip(cdf, cdf[1:]))
    assert cdf_csv(rep).count("\n") == rep.covered_count + 1


def test_subset_reindexes(plus_table):
    sub = plus_table.subset([5, 2])
    assert [c.id for c in sub.candidates] == [0, 1]
    assert np.array_equal(sub.rss[0], plus_table.rss[5])


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_adding_a_site_never_hurts(plus_table, data):
    c = plus_table.n_candidates
    base = data.draw(st.sets(st.integers(0, c - 1), max_size=c - 1))
    extra = data.draw(st.integers(0, c - 1).filter(lambda i: i not in base))
    tau = data.draw(st.sampled_from([0.5, 0.85, 0.9, 0.99]))
    a = evaluate_deployment(plus_table, base, tau, -80.0)
    b = evaluate_deployment(plus_table, base | {extra}, tau, -80.0)
    assert b.covered_count >= a.covered_count
    assert np.all(b.best_rss >= a.best_rss)
    if math.isfinite(a.mean_top_rss):
        assert b.mean_top_rss >= a.mean_top_rss
    assert b.feasible >= a.feasible
