"""Candidate RSU sites: sharp corners of the road surface plus evenly spaced
sites along long straight stretches."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geometry import Scene, _ring_area, contains_point

CORNER = "corner"
LONG_ROAD = "long_road"

NUDGE_M = 0.5
MERGE_RADIUS_M = 5.0


class CandidateError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateSite:
    id: int
    x: float
    y: float
    kind: str
    # (road component, ring, vertex or segment index); ring 0 is the outer ring
    source: tuple[int, int, int]

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def long_road_site_count(length: float, rsu_threshold: float) -> int:
    """Sites added for a straight section: ceil(l / RSU_t) when l > RSU_t, else 0."""
    if rsu_threshold <= 0:
        raise ValueError("rsu_threshold must be positive")
    if not length > rsu_threshold:
        return 0
    # guard against 1000/100 -> 10.000000000000002
    return int(math.ceil(round(length / rsu_threshold, 9)))


def _road_rings(scene: Scene):
    """Yield (component, ring index, coords) with the road interior on the left."""
    for ci, road in enumerate(scene.roads):
        for ri, ring in enumerate(road.rings):
            c = ring.coords
            ccw = _ring_area(c) > 0
            if ccw != (ri == 0):
                c = c[::-1]
            yield ci, ri, c


def _turn_angles(c: np.ndarray) -> np.ndarray:
    e_in = c - np.roll(c, 1, axis=0)
    e_out = np.roll(c, -1, axis=0) - c
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = (e_in * e_out).sum(axis=1)
    return np.arctan2(cross, dot)


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.hypot(*v))
    return v / n if n > 0 else v


def _left_normal(v: np.ndarray) -> np.ndarray:
    u = _unit(v)
    return np.array([-u[1], u[0]])


def _inside_or_fallback(scene: Scene, ci: int, p: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    if contains_point(scene.roads[ci], p):
        return p
    return fallback


def find_corner_sites(scene: Scene, angle_threshold_deg: float = 30.0, nudge: float = NUDGE_M) -> list[CandidateSite]:
    """One site per road-ring vertex whose interior angle is more than
    ``angle_threshold_deg`` away from a straight line, nudged along the
    bisector into the road."""
    thr = math.radians(angle_threshold_deg)
    sites = []
    for ci, ri, c in _road_rings(scene):
        turns = _turn_angles(c)
        n = len(c)
        for vi in range(n):
            if abs(turns[vi]) <= thr:
                continue
            v = c[vi]
            e_in = v - c[vi - 1]
            e_out = c[(vi + 1) % n] - v
            d = _left_normal(e_in) + _left_normal(e_out)
            if np.hypot(*d) < 1e-9:
                d = _left_normal(e_in)
            p = _inside_or_fallback(scene, ci, v + nudge * _unit(d), v)
            sites.append(CandidateSite(len(sites), float(p[0]), float(p[1]), CORNER, (ci, ri, vi)))
    return sites


def _sections(c: np.ndarray, corner_mask: np.ndarray):
    """Split a closed ring into polylines running between consecutive corners.

    Returns (start vertex index, list of vertex indices) per section.
    """
    n = len(c)
    corners = np.nonzero(corner_mask)[0].tolist()
    if not corners:
        return [(0, list(range(n)) + [0])]
    out = []
    for k, start in enumerate(corners):
        stop = corners[(k + 1) % len(corners)]
        idx = [start]
        j = start
        while True:
            j = (j + 1) % n
            idx.append(j)
            if j == stop:
                break
        out.append((start, idx))
    return out


def find_long_road_sites(
    scene: Scene,
    rsu_threshold: float = 100.0,
    angle_threshold_deg: float = 30.0,
    nudge: float = NUDGE_M,
) -> list[CandidateSite]:
    """Evenly spaced sites on boundary stretches longer than ``rsu_threshold``.

    A stretch of length l between two corners receives ceil(l / RSU_t) sites at
    fractions k/(n+1), strictly between its end corners.
    """
    if rsu_threshold <= 0:
        raise ValueError("rsu_threshold must be positive")
    thr = math.radians(angle_threshold_deg)
    sites = []
    for ci, ri, c in _road_rings(scene):
        corner_mask = np.abs(_turn_angles(c)) > thr
        for _start, idx in _sections(c, corner_mask):
            pts = c[idx]
            seg = np.diff(pts, axis=0)
            seg_len = np.hypot(seg[:, 0], seg[:, 1])
            total = float(seg_len.sum())
            count = long_road_site_count(total, rsu_threshold)
            if not count:
                continue
            cum = np.concatenate([[0.0], np.cumsum(seg_len)])
            for k in range(1, count + 1):
                s = total * k / (count + 1)
                j = int(np.searchsorted(cum, s, side="right") - 1)
                j = min(max(j, 0), len(seg) - 1)
                f = (s - cum[j]) / seg_len[j] if seg_len[j] > 0 else 0.0
                on_edge = pts[j] + f * seg[j]
                p = _inside_or_fallback(scene, ci, on_edge + nudge * _left_normal(seg[j]), on_edge)
                sites.append(CandidateSite(len(sites), float(p[0]), float(p[1]), LONG_ROAD, (ci, ri, idx[j])))
    return sites


def dedupe(sites: Sequence[CandidateSite], merge_radius: float = MERGE_RADIUS_M) -> list[CandidateSite]:
    """Drop sites closer than ``merge_radius`` to an already kept one.

    Corner sites are considered first so they win any merge. Ids are
    re-assigned densely.
    """
    ordered = sorted(sites, key=lambda s: (s.kind != CORNER,))
    kept: list[CandidateSite] = []
    xy = np.empty((0, 2))
    for s in ordered:
        if len(xy):
            d = np.hypot(xy[:, 0] - s.x, xy[:, 1] - s.y)
            if np.any(d < merge_radius):
                continue
        kept.append(s)
        xy = np.vstack([xy, [s.x, s.y]])
    return [replace(s, id=i) for i, s in enumerate(kept)]


def assemble_candidates(
    scene: Scene,
    rsu_threshold: float = 100.0,
    angle_threshold_deg: float = 30.0,
    merge_radius: float = MERGE_RADIUS_M,
) -> list[CandidateSite]:
    sites = find_corner_sites(scene, angle_threshold_deg) + find_long_road_sites(
        scene, rsu_threshold, angle_threshold_deg
    )
    out = dedupe(sites, merge_radius)
    if not out:
        raise CandidateError("no candidate sites; check scene/threshold")
    return out


def candidates_to_csv(sites: Sequence[CandidateSite]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "x", "y", "kind"])
    for s in sites:
        w.writerow([s.id, f"{s.x:.6f}", f"{s.y:.6f}", s.kind])
    return buf.getvalue()


def candidates_to_geojson(sites: Sequence[CandidateSite], to_lonlat=None) -> dict:
    feats = []
    for s in sites:
        coords = list(to_lonlat(s.x, s.y)) if to_lonlat else [s.x, s.y]
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": coords},
            "properties": {"id": s.id, "kind": s.kind, "x_m": s.x, "y_m": s.y},
        })
    return {"type": "FeatureCollection", "features": feats}


def candidates_from_csv(text: str) -> list[CandidateSite]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        CandidateSite(int(r["id"]), float(r["x"]), float(r["y"]), r.get("kind", CORNER), (-1, -1, -1))
        for r in rows
    ]


def dumps_geojson(obj: dict) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)
