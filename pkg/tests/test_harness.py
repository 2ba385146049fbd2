import csv
import io
import json

import pytest

from rsuplan.baselines import GaConfig
from rsuplan.harness import (
    SWEEP_COLUMNS,
    ConfigError,
    PlanContext,
    PlanningConfig,
    StageError,
    deployed_ids_from_geojson,
    eval_positions,
    parse_rss_th,
    run_plan,
    run_sweep,
)
from rsuplan.ingest import save_scene
from rsuplan.radio import RadioParams

SMALL_GA = GaConfig(population_size=20, generations=20)


@pytest.mark.parametrize("v, want", [(None, None), ("inf", None), ("off", None), (float("inf"), None),
                                     ("-84", -84.0), (-79, -79.0)])
def test_parse_rss_th(v, want):
    assert parse_rss_th(v) == want


def test_config_round_trip(tmp_path):
    cfg = PlanningConfig(radio=RadioParams(tx_power_dbm=12), tau=0.95, rss_th_dbm=None, algorithm="ga",
                         ga=SMALL_GA, seed=3)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert PlanningConfig.load(p) == cfg
    assert cfg.ga_config().seed == 3


@pytest.mark.parametrize("bad", [{"tau": 2}, {"algorithm": "magic"}, {"colour": 1}, {"tile_size_m": 0}])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        PlanningConfig.from_dict(bad)


def test_run_plan_writes_outputs(plus_scene, tmp_path):
    res = run_plan(plus_scene, PlanningConfig(border_margin_m=0), tmp_path)
    assert res.feasible
    for name in ("deployment.geojson", "tiles.csv", "rss_cdf.csv", "summary.json"):
        assert (tmp_path / name).exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "feasible"
    assert summary["n_deployed"] == res.n_deployed
    gj = json.loads((tmp_path / "deployment.geojson").read_text())
    assert deployed_ids_from_geojson(gj) == list(res.deployment.chosen)


def test_run_plan_ga_trace(plus_scene, tmp_path):
    cfg = PlanningConfig(border_margin_m=0, algorithm="ga", ga=SMALL_GA)
    run_plan(plus_scene, cfg, tmp_path)
    rows = (tmp_path / "ga_trace.csv").read_text().splitlines()
    assert len(rows) == SMALL_GA.generations + 2


def test_run_plan_infeasible(plus_scene, tmp_path):
    res = run_plan(plus_scene, PlanningConfig(border_margin_m=0, rss_th_dbm=-40), tmp_path)
    assert res.status == "infeasible"
    gj = json.loads((tmp_path / "deployment.geojson").read_text())
    assert gj["features"] == []


def test_gc_missing_threshold_reported_infeasible(grid_scene):
    res = run_plan(grid_scene, PlanningConfig(algorithm="gc", rss_th_dbm=-79.0, tau=0.99))
    assert res.deployment is not None
    assert res.report.feasible_5b
    assert res.status == ("feasible" if res.report.feasible_5c else "infeasible")


def test_tau_zero_empty_deployment(plus_scene, tmp_path):
    res = run_plan(plus_scene, PlanningConfig(border_margin_m=0, tau=0.0), tmp_path)
    assert res.feasible and res.n_deployed == 0
    assert json.loads((tmp_path / "deployment.geojson").read_text())["features"] == []
    assert (tmp_path / "tiles.csv").exists()


def test_stage_error_names_stage(tmp_path):
    with pytest.raises(StageError, match="load"):
        run_plan(tmp_path / "missing.json", PlanningConfig())


def test_context_reused(grid_scene):
    cfg = PlanningConfig()
    ctx = PlanContext(grid_scene, cfg)
    res = run_plan(grid_scene, cfg, None, ctx)
    assert res.n_candidates == len(ctx.candidates)


def test_sweep_rows(plus_scene, tmp_path):
    p = tmp_path / "plus.json"
    save_scene(plus_scene, p)
    base = PlanningConfig(border_margin_m=0, ga=SMALL_GA)
    rows = run_sweep(p, [0.85, 0.9], [None, -84.0, -40.0], ["agile", "gc", "ga"], [0, 1], base, tmp_path / "out")
    assert len(rows) == 2 * 3 * 3 * 2
    assert all(list(r) == SWEEP_COLUMNS for r in rows)
    assert {r["scene"] for r in rows} == {"plus"}
    bad = [r for r in rows if r["rss_th_dbm"] == -40.0]
    assert all(r["status"] == "infeasible" for r in bad)
    written = list(csv.DictReader(io.StringIO((tmp_path / "out" / "sweep.csv").read_text())))
    assert len(written) == len(rows)


def test_sweep_empty_lists(plus_scene):
    with pytest.raises(ConfigError):
        run_sweep(plus_scene, [], [None], ["agile"])


def test_eval_positions(plus_scene):
    cfg = PlanningConfig(border_margin_m=0, rss_th_dbm=None, tau=0.5)
    _, rep = eval_positions(plus_scene, [(50.0, 50.0)], cfg)
    assert rep.coverage_rate == 1.0
    _, empty = eval_positions(plus_scene, [], cfg)
    assert empty.covered_count == 0 and not empty.feasible
