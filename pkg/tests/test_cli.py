import json
import subprocess
import sys

import pytest

from rsuplan.cli import main
from rsuplan.ingest import save_scene

from test_ingest import OSM, WINDOW


@pytest.fixture
def plus_file(plus_scene, tmp_path):
    p = tmp_path / "plus.json"
    save_scene(plus_scene, p)
    return p


def test_synth_and_plan(tmp_path, capsys):
    scene = tmp_path / "grid.json"
    assert main(["synth", "--blocks", "3", "3", "-o", str(scene)]) == 0
    assert main(["plan", str(scene), "--tau", "0.9", "--rss-th", "-84", "-o", str(tmp_path / "run")]) == 0
    out = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert out["status"] == "feasible"
    assert (tmp_path / "run" / "deployment.geojson").exists()


def test_plan_infeasible_exit_code(plus_file, tmp_path):
    rc = main(["plan", str(plus_file), "--border-margin", "0", "--rss-th", "-40", "-o", str(tmp_path / "r")])
    assert rc == 2


def test_crash_exit_code(tmp_path):
    assert main(["plan", str(tmp_path / "nope.json"), "-o", str(tmp_path)]) == 1


def test_config_file_and_override(plus_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tau": 0.85, "border_margin_m": 0, "rss_th_dbm": "inf"}))
    assert main(["plan", str(plus_file), "--config", str(cfg), "--algorithm", "gc", "-o", str(tmp_path / "r")]) == 0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["algorithm"] == "gc"
    assert summary["config"]["tau"] == 0.85
    assert summary["config"]["rss_th_dbm"] is None


def test_candidates_command(plus_file, tmp_path, capsys):
    assert main(["candidates", str(plus_file), "--geojson", str(tmp_path / "c.geojson")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "id,x,y,kind" and len(lines) == 13
    assert len(json.loads((tmp_path / "c.geojson").read_text())["features"]) == 12


def test_sweep_command(plus_file, tmp_path):
    rc = main(["sweep", str(plus_file), "--border-margin", "0", "--taus", "0.9", "--rss-ths", "inf", "-84",
               "--algorithms", "agile", "ga", "--ga-generations", "10", "--ga-population", "10",
               "-o", str(tmp_path / "sw")])
    assert rc == 0
    assert len((tmp_path / "sw" / "sweep.csv").read_text().splitlines()) == 1 + 4


def test_eval_command(plus_file, tmp_path, capsys):
    main(["plan", str(plus_file), "--border-margin", "0", "-o", str(tmp_path / "r")])
    capsys.readouterr()
    rc = main(["eval", str(plus_file), str(tmp_path / "r" / "deployment.geojson"), "--border-margin", "0"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["feasible_5b"] is True


def test_ingest_command(tmp_path):
    osm = tmp_path / "m.osm"
    osm.write_text(OSM)
    out = tmp_path / "s.json"
    assert main(["ingest", str(osm), "--window", *map(str, WINDOW), "-o", str(out)]) == 0
    assert json.loads(out.read_text())["origin"] == list(WINDOW[:2])


def test_entry_point_module(tmp_path):
    scene = tmp_path / "g.json"
    r = subprocess.run([sys.executable, "-m", "rsuplan.cli", "synth", "--blocks", "2", "2", "-o", str(scene)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert scene.exists()
