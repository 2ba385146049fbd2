"""Tile grid, candidate-to-tile visibility, and the two deployment constraints:
LOS coverage of at least ceil(tau*|N|) reference tiles, and a mean RSS over
the best ceil(tau*|N|) tiles of at least RSS_th."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .candidates import CandidateSite
from .geometry import Scene
from .radio import RadioParams, rss_dbm

NEG_INF = float("-inf")


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class TileGrid:
    tile_size: float
    centers: np.ndarray  # (Z, 2), row-major over y then x
    reference: np.ndarray  # indices into centers of road tiles
    area_of_interest: tuple[float, float, float, float]
    shape: tuple[int, int]  # (ny, nx)

    @property
    def ref_xy(self) -> np.ndarray:
        return self.centers[self.reference]

    @property
    def n_reference(self) -> int:
        return len(self.reference)


def build_grid(scene: Scene, tile_size: float = 4.0, border_margin: float = 50.0) -> TileGrid:
    """Square tiles over the map shrunk by ``border_margin`` on every side.

    Reference tiles are those whose center lies on the road surface.
    """
    if not tile_size > 0:
        raise CoverageError("tile size must be positive")
    if border_margin < 0:
        raise CoverageError("border margin must be non-negative")
    x0, y0, x1, y1 = scene.bounds
    aoi = (x0 + border_margin, y0 + border_margin, x1 - border_margin, y1 - border_margin)
    nx = int(math.floor((aoi[2] - aoi[0]) / tile_size + 1e-9))
    ny = int(math.floor((aoi[3] - aoi[1]) / tile_size + 1e-9))
    if nx < 1 or ny < 1:
        raise CoverageError("tile grid is empty; margin too large for the map")
    xs = aoi[0] + tile_size * (np.arange(nx) + 0.5)
    ys = aoi[1] + tile_size * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    on_road = scene.road_contains(centers[:, 0], centers[:, 1])
    return TileGrid(tile_size, centers, np.nonzero(on_road)[0], aoi, (ny, nx))


@dataclass(frozen=True)
class VisibilityTable:
    """RSS of every candidate at every reference tile; ``-inf`` marks no LOS.

    Row ``i`` is candidate ``i``, column ``n`` is reference tile ``n``.
    """

    candidates: tuple[CandidateSite, ...]
    grid: TileGrid
    rss: np.ndarray  # (C, N)

    @property
    def n_candidates(self) -> int:
        return self.rss.shape[0]

    @property
    def n_tiles(self) -> int:
        return self.rss.shape[1]

    @property
    def los(self) -> np.ndarray:
        return np.isfinite(self.rss)

    def los_tiles(self, i: int) -> list[tuple[int, float]]:
        row = self.rss[i]
        idx = np.nonzero(np.isfinite(row))[0]
        return [(int(n), float(row[n])) for n in idx]

    def servers(self, n: int) -> list[tuple[int, float]]:
        col = self.rss[:, n]
        idx = np.nonzero(np.isfinite(col))[0]
        return [(int(i), float(col[i])) for i in idx]

    def subset(self, ids: Sequence[int]) -> "VisibilityTable":
        """Table restricted to ``ids``, re-indexed densely in the given order."""
        ids = list(ids)
        cands = tuple(replace(self.candidates[i], id=k) for k, i in enumerate(ids))
        return VisibilityTable(cands, self.grid, self.rss[ids].copy())


def build_visibility(
    scene: Scene,
    grid: TileGrid,
    candidates: Sequence[CandidateSite],
    params: RadioParams,
) -> VisibilityTable:
    if not candidates:
        raise CoverageError("no candidates")
    ref = grid.ref_xy
    rss = np.full((len(candidates), len(ref)), NEG_INF)
    for i, c in enumerate(candidates):
        blocked = scene.blocked_from((c.x, c.y), ref[:, 0], ref[:, 1])
        d = np.hypot(ref[:, 0] - c.x, ref[:, 1] - c.y)
        row = rss_dbm(params, d)
        rss[i] = np.where(blocked, NEG_INF, row)
    return VisibilityTable(tuple(candidates), grid, rss)


def required_tiles(n_tiles: int, tau: float) -> int:
    """ceil(tau * |N|), robust to float noise such as 0.9 * 3600."""
    if not 0.0 <= tau <= 1.0:
        raise CoverageError(f"tau must be in [0, 1], got {tau}")
    return int(math.ceil(round(tau * n_tiles, 9)))


def top_mean(best: np.ndarray, k: int) -> np.ndarray | float:
    """Mean of the ``k`` largest values along the last axis.

    Summation runs over the sorted top-k so equal multisets give bit-equal
    results. ``-inf`` entries propagate, ``k == 0`` gives NaN.
    """
    n = best.shape[-1]
    if k <= 0:
        return np.full(best.shape[:-1], np.nan) if best.ndim > 1 else float("nan")
    part = np.partition(best, n - k, axis=-1)[..., n - k:]
    vals = np.sort(part, axis=-1)
    with np.errstate(invalid="ignore"):
        out = vals.mean(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CoverageReport:
    covered_count: int
    n_tiles: int
    required: int
    best_rss: np.ndarray  # per reference tile, -inf when uncovered
    mean_top_rss: float  # -inf when fewer than `required` tiles are covered, NaN if required == 0
    rss_th: float | None
    feasible_5b: bool
    feasible_5c: bool

    @property
    def coverage_rate(self) -> float:
        return self.covered_count / self.n_tiles if self.n_tiles else 0.0

    @property
    def feasible(self) -> bool:
        return self.feasible_5b and self.feasible_5c

    def summary(self) -> dict:
        m = self.mean_top_rss
        return {
            "covered_count": self.covered_count,
            "n_reference_tiles": self.n_tiles,
            "required_tiles": self.required,
            "coverage_rate": self.coverage_rate,
            "mean_top_rss_dbm": m if math.isfinite(m) else None,
            "feasible_5b": self.feasible_5b,
            "feasible_5c": self.feasible_5c,
        }


def _feasible_5c(covered: int, required: int, mean: float, rss_th: float | None) -> bool:
    if rss_th is None:
        return True
    if covered < required:
        return False
    return required == 0 or mean >= rss_th


def report_from_best(best: np.ndarray, tau: float, rss_th: float | None) -> CoverageReport:
    n = best.shape[0]
    k = required_tiles(n, tau)
    covered = int(np.isfinite(best).sum())
    mean = top_mean(best, k)
    return CoverageReport(
        covered_count=covered,
        n_tiles=n,
        required=k,
        best_rss=best,
        mean_top_rss=mean,
        rss_th=rss_th,
        feasible_5b=covered >= k,
        feasible_5c=_feasible_5c(covered, k, mean, rss_th),
    )


def best_rss(table: VisibilityTable, deployed: Iterable[int]) -> np.ndarray:
    ids = sorted(set(int(i) for i in deployed))
    for i in ids:
        if not 0 <= i < table.n_candidates:
            raise CoverageError(f"unknown candidate id {i}")
    if not ids:
        return np.full(table.n_tiles, NEG_INF)
    return table.rss[ids].max(axis=0)


def evaluate_deployment(
    table: VisibilityTable,
    deployed: Iterable[int],
    tau: float,
    rss_th: float | None,
) -> CoverageReport:
    """Score a deployment from scratch. ``rss_th=None`` disables the RSS constraint."""
    return report_from_best(best_rss(table, deployed), tau, rss_th)


def _fmt(v: float) -> str:
    return f"{v:.6f}" if math.isfinite(v) else "-inf"


def tiles_csv(table: VisibilityTable, report: CoverageReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "best_rss_dbm", "covered"])
    for (x, y), v in zip(table.grid.ref_xy, report.best_rss):
        w.writerow([f"{x:.3f}", f"{y:.3f}", _fmt(float(v)), int(math.isfinite(v))])
    return buf.getvalue()


def rss_cdf(report: CoverageReport) -> list[tuple[float, float]]:
    vals = np.sort(report.best_rss[np.isfinite(report.best_rss)])
    n = len(vals)
    return [(float(v), (i + 1) / n) for i, v in enumerate(vals)]


def cdf_csv(report: CoverageReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rss_dbm", "cumulative_fraction"])
    for v, f in rss_cdf(report):
        w.writerow([_fmt(v), f"{f:.6f}"])
    return buf.getvalue()
