"""End-to-end runs: scene -> candidates -> tiles -> solver -> metrics and files.

Planning config files are JSON objects whose keys mirror
:class:`PlanningConfig`; missing keys take the defaults below (the radio
defaults are the 60 GHz values used throughout). Example::

    {"tau": 0.95, "rss_th_dbm": -84, "algorithm": "agile",
     "radio": {"tx_power_dbm": 10}, "ga": {"generations": 200}, "seed": 3}

``rss_th_dbm`` may be ``null`` or ``"inf"`` to disable the RSS constraint.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import GaConfig, ga_trace_csv, solve_exhaustive, solve_ga, solve_gc
from .candidates import CandidateSite, assemble_candidates
from .coverage import (
    CoverageReport,
    VisibilityTable,
    build_grid,
    build_visibility,
    cdf_csv,
    evaluate_deployment,
    tiles_csv,
)
from .geometry import Scene
from .ingest import load_scene, local_to_lonlat
from .placement import Deployment, InfeasibleError, solve_agile
from .radio import RadioParams

log = logging.getLogger(__name__)

ALGORITHMS = ("agile", "gc", "ga", "exhaustive")
TAU_SWEEP = (0.85, 0.90, 0.95, 0.99)
RSS_TH_SWEEP = (None, -90.0, -84.0, -79.0)


class ConfigError(ValueError):
    pass


def parse_rss_th(value) -> float | None:
    """``None``/"inf"/"none"/"off" disable the threshold; anything else is dBm."""
    if value is None:
        return None
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "+inf", "-inf", "none", "off", "disabled", ""):
            return None
        value = float(v)
    value = float(value)
    return None if math.isinf(value) else value


@dataclass(frozen=True)
class PlanningConfig:
    radio: RadioParams = field(default_factory=RadioParams)
    tau: float = 0.9
    rss_th_dbm: float | None = -84.0
    rsu_threshold_m: float = 100.0
    tile_size_m: float = 4.0
    border_margin_m: float = 50.0
    angle_threshold_deg: float = 30.0
    algorithm: str = "agile"
    ga: GaConfig = field(default_factory=GaConfig)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {self.tau}")
        if not self.tile_size_m > 0:
            raise ConfigError("tile_size_m must be positive")
        if not self.rsu_threshold_m > 0:
            raise ConfigError("rsu_threshold_m must be positive")
        if self.border_margin_m < 0:
            raise ConfigError("border_margin_m must be non-negative")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")

    @classmethod
    def from_dict(cls, data: dict) -> "PlanningConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "radio" in data:
            data["radio"] = RadioParams(**data["radio"])
        if "ga" in data:
            data["ga"] = GaConfig(**data["ga"])
        if "rss_th_dbm" in data:
            data["rss_th_dbm"] = parse_rss_th(data["rss_th_dbm"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "PlanningConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def ga_config(self) -> GaConfig:
        """GA settings with the run seed applied."""
        return replace(self.ga, seed=self.seed)


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.__cause__ = exc


@dataclass
class RunResult:
    config: PlanningConfig
    n_candidates: int
    deployment: Deployment | None
    report: CoverageReport | None
    timings: dict[str, float]
    status: str = "feasible"  # feasible | infeasible
    message: str = ""

    @property
    def n_deployed(self) -> int | None:
        return self.deployment.objective if self.deployment else None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def summary(self) -> dict:
        out = {
            "status": self.status,
            "message": self.message,
            "algorithm": self.config.algorithm,
            "config": self.config.to_dict(),
            "n_candidates": self.n_candidates,
            "n_deployed": self.n_deployed,
            "deployed_ids": list(self.deployment.chosen) if self.deployment else [],
            "phase_added": (
                {str(k): v for k, v in sorted(self.deployment.phase_added.items())} if self.deployment else {}
            ),
            "timings_s": self.timings,
        }
        if self.report is not None:
            out.update(self.report.summary())
        return out


class PlanContext:
    """Scene plus the solver-independent products (candidates, tiles, LOS table).

    Reused across runs whose geometry and radio settings agree.
    """

    def __init__(self, scene: Scene, config: PlanningConfig):
        self.scene = scene
        self.timings: dict[str, float] = {}
        t = time.perf_counter()
        try:
            self.candidates: list[CandidateSite] = assemble_candidates(
                scene, config.rsu_threshold_m, config.angle_threshold_deg
            )
        except Exception as exc:
            raise StageError("candidates", exc)
        self.timings["candidates"] = time.perf_counter() - t
        t = time.perf_counter()
        try:
            self.grid = build_grid(scene, config.tile_size_m, config.border_margin_m)
        except Exception as exc:
            raise StageError("grid", exc)
        self.timings["grid"] = time.perf_counter() - t
        t = time.perf_counter()
        try:
            self.table: VisibilityTable = build_visibility(scene, self.grid, self.candidates, config.radio)
        except Exception as exc:
            raise StageError("visibility", exc)
        self.timings["visibility"] = time.perf_counter() - t
        self.key = _context_key(config)


def _context_key(config: PlanningConfig) -> tuple:
    return (config.radio, config.rsu_threshold_m, config.tile_size_m, config.border_margin_m, config.angle_threshold_deg)


def solve(table: VisibilityTable, config: PlanningConfig, trace: list | None = None) -> Deployment:
    tau, th = config.tau, config.rss_th_dbm
    if config.algorithm == "agile":
        return solve_agile(table, tau, th)
    if config.algorithm == "gc":
        return solve_gc(table, tau, th)
    if config.algorithm == "ga":
        return solve_ga(table, tau, th, config.ga_config(), trace)
    return solve_exhaustive(table, tau, th)


def deployment_geojson(scene: Scene, table: VisibilityTable, dep: Deployment | None) -> dict:
    feats = []
    if dep is not None:
        for i in dep.chosen:
            c = table.candidates[i]
            if scene.origin:
                coords = [round(v, 9) for v in local_to_lonlat(scene.origin, scene.bounds, c.x, c.y)]
            else:
                coords = [c.x, c.y]
            feats.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": coords},
                "properties": {
                    "id": i,
                    "kind": c.kind,
                    "x_m": c.x,
                    "y_m": c.y,
                    "phase_added": dep.phase_added.get(i, 0),
                },
            })
    return {"type": "FeatureCollection", "features": feats}


def deployed_ids_from_geojson(data: dict) -> list[int]:
    return sorted(int(f["properties"]["id"]) for f in data.get("features", []))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def run_plan(
    scene: Scene | str | Path,
    config: PlanningConfig,
    out_dir: str | Path | None = None,
    context: PlanContext | None = None,
) -> RunResult:
    """Full pipeline for one configuration.

    Infeasible instances come back as a result with ``status="infeasible"``;
    other failures raise :class:`StageError` naming the stage. When
    ``out_dir`` is given the deployment GeoJSON, tile CSV, RSS CDF CSV and a
    summary JSON are written there (plus the GA trace for GA runs).
    """
    if not isinstance(scene, Scene):
        try:
            scene = load_scene(scene)
        except Exception as exc:
            raise StageError("load", exc)
    if context is None or context.key != _context_key(config) or context.scene is not scene:
        context = PlanContext(scene, config)
    table = context.table
    timings = dict(context.timings)
    trace: list = [] if config.algorithm == "ga" else None
    t = time.perf_counter()
    status, message = "feasible", ""
    try:
        dep = solve(table, config, trace)
    except InfeasibleError as exc:
        dep, status, message = None, "infeasible", str(exc)
    except Exception as exc:
        raise StageError("solve", exc)
    timings["solve"] = time.perf_counter() - t

    if dep is not None:
        # never trust solver state: re-score from scratch
        report = evaluate_deployment(table, dep.chosen, config.tau, config.rss_th_dbm)
        dep.report = report
        if config.algorithm == "gc":
            if not report.feasible_5b:
                raise StageError("verify", RuntimeError("GC result misses the coverage target"))
            if not report.feasible_5c:
                status = "infeasible"
                message = "GC ignores the RSS threshold; mean-RSS constraint not met"
        elif not report.feasible:
            raise StageError("verify", RuntimeError("solver returned an infeasible deployment"))
    else:
        report = None

    result = RunResult(config, table.n_candidates, dep, report, timings, status, message)
    if out_dir is not None:
        out = Path(out_dir)
        _write(out / "deployment.geojson", json.dumps(deployment_geojson(scene, table, dep), indent=1, sort_keys=True))
        if report is not None:
            _write(out / "tiles.csv", tiles_csv(table, report))
            _write(out / "rss_cdf.csv", cdf_csv(report))
        if trace is not None:
            _write(out / "ga_trace.csv", ga_trace_csv(trace))
        _write(out / "summary.json", json.dumps(result.summary(), indent=1, sort_keys=True))
    return result


SWEEP_COLUMNS = [
    "scene", "algorithm", "tau", "rss_th_dbm", "seed", "status", "n_candidates", "n_deployed",
    "coverage_rate", "mean_top_rss_dbm", "feasible_5b", "feasible_5c", "runtime_s", "error",
]


def run_sweep(
    scene: Scene | str | Path,
    taus: Sequence[float],
    rss_ths: Sequence[float | None],
    algorithms: Sequence[str],
    seeds: Sequence[int] = (0,),
    base: PlanningConfig | None = None,
    out_dir: str | Path | None = None,
    scene_name: str | None = None,
) -> list[dict]:
    """Cross product of tau x RSS_th x algorithm x seed on one scene.

    Failures of a single cell are recorded in its row and the sweep goes on.
    Rows match :data:`SWEEP_COLUMNS`; with ``out_dir`` they are also written
    to ``sweep.csv`` and each cell gets its own output directory.
    """
    if not taus or not rss_ths or not algorithms or not seeds:
        raise ConfigError("sweep lists must be non-empty")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}")
    name = scene_name or (Path(scene).stem if not isinstance(scene, Scene) else "scene")
    if not isinstance(scene, Scene):
        scene = load_scene(scene)
    base = base or PlanningConfig()
    context = PlanContext(scene, base)
    rows = []
    for tau, th, algo, seed in itertools.product(taus, rss_ths, algorithms, seeds):
        row = {"scene": name, "algorithm": algo, "tau": tau,
               "rss_th_dbm": "inf" if th is None else th, "seed": seed}
        t = time.perf_counter()
        try:
            cfg = replace(base, tau=tau, rss_th_dbm=th, algorithm=algo, seed=seed)
            cell_dir = None
            if out_dir is not None:
                cell_dir = Path(out_dir) / f"{algo}_tau{tau}_rss{row['rss_th_dbm']}_seed{seed}"
            res = run_plan(scene, cfg, cell_dir, context)
            row.update(status=res.status, n_candidates=res.n_candidates, n_deployed=res.n_deployed, error=res.message)
            if res.report is not None:
                s = res.report.summary()
                row.update(coverage_rate=s["coverage_rate"], mean_top_rss_dbm=s["mean_top_rss_dbm"],
                           feasible_5b=s["feasible_5b"], feasible_5c=s["feasible_5c"])
        except Exception as exc:  # recorded per cell
            row.update(status="error", error=str(exc))
        row["runtime_s"] = round(time.perf_counter() - t, 4)
        rows.append({k: row.get(k, "") for k in SWEEP_COLUMNS})
    if out_dir is not None:
        _write(Path(out_dir) / "sweep.csv", sweep_csv(rows))
    return rows


def sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def eval_positions(scene: Scene, positions: Sequence[tuple[float, float]], config: PlanningConfig):
    """Score externally chosen RSU positions on a scene."""
    sites = [CandidateSite(i, float(x), float(y), "external", (-1, -1, -1)) for i, (x, y) in enumerate(positions)]
    grid = build_grid(scene, config.tile_size_m, config.border_margin_m)
    if not sites:
        report = evaluate_deployment(
            VisibilityTable((), grid, np.full((0, grid.n_reference), -np.inf)), [], config.tau, config.rss_th_dbm
        )
        return None, report
    table = build_visibility(scene, grid, sites, config.radio)
    return table, evaluate_deployment(table, range(len(sites)), config.tau, config.rss_th_dbm)
