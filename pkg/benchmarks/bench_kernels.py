"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Workloads: point-in-region over the 5x5 grid's tiles, and the full
candidate x tile visibility table on the 5x5 grid and the irregular scene.
"""

import argparse
import time

import numpy as np

from rsuplan import _kernels_py, geometry
from rsuplan.candidates import assemble_candidates
from rsuplan.coverage import build_grid, build_visibility
from rsuplan.ingest import generate_irregular_grid, generate_synthetic_grid
from rsuplan.radio import TABLE_I

try:
    from rsuplan import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def workloads():
    grid = generate_synthetic_grid(5, 5)
    irr = generate_irregular_grid(5, 5, seed=0)
    out = []
    for name, scene in (("grid", grid), ("irregular", irr)):
        tiles = build_grid(scene, 4.0, 50.0)
        cands = assemble_candidates(scene)
        xs, ys = tiles.centers[:, 0], tiles.centers[:, 1]
        out.append((f"contains  {name} ({len(xs)} pts)", lambda s=scene, x=xs, y=ys: s.road_contains(x, y)))
        out.append((f"LOS table {name} ({len(cands)}x{tiles.n_reference})",
                    lambda s=scene, t=tiles, c=cands: build_visibility(s, t, c, TABLE_I).rss))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels not built; nothing to compare")
        return
    print(f"{'workload':<40} {'cython s':>10} {'python s':>10} {'speedup':>8}")
    for name, fn in workloads():
        geometry.kernels = compiled
        tc, a = best_of(fn, args.repeat)
        geometry.kernels = _kernels_py
        tp, b = best_of(fn, args.repeat)
        assert np.array_equal(np.asarray(a), np.asarray(b)), name
        print(f"{name:<40} {tc:>10.3f} {tp:>10.3f} {tp / tc:>7.1f}x")
    geometry.kernels = compiled


if __name__ == "__main__":
    main()
