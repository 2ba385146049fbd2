"""Command line interface.

Exit codes: 0 feasible / success, 2 infeasible, 1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .candidates import assemble_candidates, candidates_to_csv, candidates_to_geojson, dumps_geojson
from .harness import (
    ALGORITHMS,
    PlanningConfig,
    eval_positions,
    parse_rss_th,
    run_plan,
    run_sweep,
)
from .ingest import (
    build_scene,
    generate_irregular_grid,
    generate_synthetic_grid,
    ingest_osm,
    load_scene,
    local_to_lonlat,
    save_scene,
    window_bounds,
)

EXIT_OK, EXIT_CRASH, EXIT_INFEASIBLE = 0, 1, 2

log = logging.getLogger("rsuplan")

_RADIO_FLAGS = {
    "tx_power": "tx_power_dbm",
    "tx_gain": "tx_gain_dbi",
    "path_loss_exponent": "path_loss_exponent",
    "channel_att": "channel_att_factor_db",
    "att_per_km": "att_per_km_db",
}
_GA_FLAGS = {
    "ga_population": "population_size",
    "ga_generations": "generations",
    "ga_tournament": "tournament_size",
    "ga_crossover": "crossover_prob",
    "ga_mutation": "mutation_prob_per_bit",
    "ga_penalty": "penalty_weight",
}


def _add_config_flags(p: argparse.ArgumentParser, solver: bool = True) -> None:
    p.add_argument("--config", help="JSON planning config; flags override it")
    p.add_argument("--rsu-threshold", type=float, help="long-road threshold in m (default 100)")
    p.add_argument("--angle-threshold", type=float, help="corner angle threshold in degrees (default 30)")
    if not solver:
        return
    p.add_argument("--tau", type=float, help="coverage tolerance in [0, 1]")
    p.add_argument("--rss-th", help="mean-RSS threshold in dBm, or 'inf' to disable")
    p.add_argument("--tile-size", type=float, help="tile side in m (default 4)")
    p.add_argument("--border-margin", type=float, help="area-of-interest margin in m (default 50)")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--seed", type=int)
    for flag in _RADIO_FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), type=float)
    for flag in _GA_FLAGS:
        kind = int if flag in ("ga_population", "ga_generations", "ga_tournament") else float
        p.add_argument("--" + flag.replace("_", "-"), type=kind)


def _config_from_args(args) -> PlanningConfig:
    cfg = PlanningConfig.load(args.config) if getattr(args, "config", None) else PlanningConfig()
    simple = {
        "tau": "tau",
        "rsu_threshold": "rsu_threshold_m",
        "tile_size": "tile_size_m",
        "border_margin": "border_margin_m",
        "angle_threshold": "angle_threshold_deg",
        "algorithm": "algorithm",
        "seed": "seed",
    }
    updates = {field: getattr(args, flag) for flag, field in simple.items() if getattr(args, flag, None) is not None}
    if getattr(args, "rss_th", None) is not None:
        updates["rss_th_dbm"] = parse_rss_th(args.rss_th)
    radio = {f: getattr(args, k) for k, f in _RADIO_FLAGS.items() if getattr(args, k, None) is not None}
    if radio:
        updates["radio"] = replace(cfg.radio, **radio)
    ga = {f: getattr(args, k) for k, f in _GA_FLAGS.items() if getattr(args, k, None) is not None}
    if ga:
        updates["ga"] = replace(cfg.ga, **ga)
    return replace(cfg, **updates)


def cmd_ingest(args) -> int:
    window = args.window
    if args.road_classes:
        buildings, roads = ingest_osm(args.osm, window, args.road_classes)
    else:
        buildings, roads = ingest_osm(args.osm, window)
    scene = build_scene(buildings, roads, window_bounds(window), origin=(window[0], window[1]))
    save_scene(scene, args.output)
    print(f"scene: {len(scene.buildings)} building blocks, {len(scene.roads)} road components -> {args.output}")
    return EXIT_OK


def cmd_synth(args) -> int:
    n, m = args.blocks
    if args.irregular:
        scene = generate_irregular_grid(n, m, args.block_size, args.road_width, seed=args.seed)
    else:
        scene = generate_synthetic_grid(n, m, args.block_size, args.road_width)
    save_scene(scene, args.output)
    print(f"scene: {scene.width:.0f} x {scene.height:.0f} m -> {args.output}")
    return EXIT_OK


def cmd_candidates(args) -> int:
    cfg = _config_from_args(args)
    scene = load_scene(args.scene)
    sites = assemble_candidates(scene, cfg.rsu_threshold_m, cfg.angle_threshold_deg)
    text = candidates_to_csv(sites)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.geojson:
        to_ll = (lambda x, y: local_to_lonlat(scene.origin, scene.bounds, x, y)) if scene.origin else None
        Path(args.geojson).write_text(dumps_geojson(candidates_to_geojson(sites, to_ll)))
    return EXIT_OK


def cmd_plan(args) -> int:
    cfg = _config_from_args(args)
    res = run_plan(args.scene, cfg, args.output)
    print(json.dumps({k: v for k, v in res.summary().items() if k != "config"}, indent=1, sort_keys=True))
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    rss = [parse_rss_th(v) for v in args.rss_ths]
    rows = run_sweep(args.scene, args.taus, rss, args.algorithms, args.seeds, cfg, args.output)
    for r in rows:
        print(f"{r['algorithm']:>10} tau={r['tau']:<5} rss_th={r['rss_th_dbm']!s:<6} seed={r['seed']} "
              f"-> {r['status']:<10} |D|={r['n_deployed']}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    scene = load_scene(args.scene)
    data = json.loads(Path(args.deployment).read_text())
    positions = []
    for f in data.get("features", []):
        props = f.get("properties", {})
        if "x_m" in props and "y_m" in props:
            positions.append((props["x_m"], props["y_m"]))
        else:
            positions.append(tuple(f["geometry"]["coordinates"][:2]))
    _, report = eval_positions(scene, positions, cfg)
    summary = report.summary()
    summary["n_deployed"] = len(positions)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsuplan", description="mmWave road-side-unit placement")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="OSM XML extract -> scene file")
    p.add_argument("osm")
    p.add_argument("--window", type=float, nargs=4, required=True, metavar=("MIN_LON", "MIN_LAT", "MAX_LON", "MAX_LAT"))
    p.add_argument("--road-classes", nargs="+", help="highway classes to keep")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic grid scene")
    p.add_argument("--blocks", type=int, nargs=2, default=(5, 5), metavar=("N", "M"))
    p.add_argument("--block-size", type=float, default=90.0)
    p.add_argument("--road-width", type=float, default=10.0)
    p.add_argument("--irregular", action="store_true", help="randomly perturbed block outlines")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("candidates", help="list candidate RSU sites")
    p.add_argument("scene")
    _add_config_flags(p, solver=False)
    p.add_argument("-o", "--output", help="CSV path (stdout if omitted)")
    p.add_argument("--geojson", help="also write a GeoJSON point file")
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("plan", help="solve one configuration")
    p.add_argument("scene")
    _add_config_flags(p)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="tau x RSS_th x algorithm x seed grid")
    p.add_argument("scene")
    _add_config_flags(p)
    p.add_argument("--taus", type=float, nargs="+", default=[0.85, 0.90, 0.95, 0.99])
    p.add_argument("--rss-ths", nargs="+", default=["inf", "-90", "-84", "-79"])
    p.add_argument("--algorithms", nargs="+", default=["agile"], choices=ALGORITHMS)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score an external deployment GeoJSON")
    p.add_argument("scene")
    p.add_argument("deployment")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        log.error("%s", exc)
        if args.verbose:
            raise
        return EXIT_CRASH


if __name__ == "__main__":
    sys.exit(main())
