"""Planar polygon kernel: simple polygons, polygons with holes, building union
with courtyard filling, point containment and line-of-sight blockage.

Coordinates are map-local meters. Boundary semantics: a point on an edge is
inside; a segment that only touches a building boundary (grazes a vertex or
runs along an edge) is not blocked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
import shapely
from shapely.geometry import LinearRing, MultiPolygon, Polygon

from ._backend import kernels

log = logging.getLogger(__name__)

EPS = 1e-7
SNAP_GRID = 1e-6
SLIVER_AREA = 1e-4

Point = tuple[float, float]


class GeometryError(ValueError):
    """Invalid polygon input."""


def _ring_area(coords: np.ndarray) -> float:
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _canonical_ring(coords: Sequence[Sequence[float]], ccw: bool = True) -> tuple[Point, ...]:
    pts = [(float(x), float(y)) for x, y in coords]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    arr = np.asarray(pts, dtype=float)
    if len(pts) >= 3 and (_ring_area(arr) > 0) != ccw:
        pts.reverse()
    start = min(range(len(pts)), key=lambda i: pts[i])
    return tuple(pts[start:] + pts[:start])


@dataclass(frozen=True)
class SimplePolygon:
    """Closed ring of straight, non-crossing edges. Closure is implied."""

    vertices: tuple[Point, ...]

    @classmethod
    def from_coords(cls, coords: Iterable[Sequence[float]]) -> "SimplePolygon":
        pts = [(float(x), float(y)) for x, y in coords]
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts.pop()
        return cls(tuple(pts))

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "SimplePolygon":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @cached_property
    def coords(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)

    @property
    def area(self) -> float:
        return abs(_ring_area(self.coords))

    @property
    def signed_area(self) -> float:
        return _ring_area(self.coords)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        c = self.coords
        return (float(c[:, 0].min()), float(c[:, 1].min()), float(c[:, 0].max()), float(c[:, 1].max()))

    def validate(self) -> None:
        if len(self.vertices) < 3:
            raise GeometryError(f"polygon needs at least 3 vertices, got {len(self.vertices)}")
        if not np.all(np.isfinite(self.coords)):
            raise GeometryError("polygon has non-finite coordinates")
        if self.area <= 0.0:
            raise GeometryError("polygon has zero area")
        if not LinearRing(self.vertices).is_simple:
            raise GeometryError("polygon is self-intersecting")

    def canonical(self, ccw: bool = True) -> "SimplePolygon":
        return SimplePolygon(_canonical_ring(self.vertices, ccw))

    def to_shapely(self) -> Polygon:
        return Polygon(self.vertices)


@dataclass(frozen=True)
class PolygonWithHoles:
    outer: SimplePolygon
    holes: tuple[SimplePolygon, ...] = ()

    @property
    def area(self) -> float:
        return self.outer.area - sum(h.area for h in self.holes)

    @property
    def rings(self) -> tuple[SimplePolygon, ...]:
        return (self.outer,) + tuple(self.holes)

    def validate(self) -> None:
        self.outer.validate()
        for h in self.holes:
            h.validate()
        poly = self.to_shapely()
        if not poly.is_valid:
            raise GeometryError(f"invalid polygon with holes: {shapely.is_valid_reason(poly)}")

    def to_shapely(self) -> Polygon:
        return Polygon(self.outer.vertices, [h.vertices for h in self.holes])

    @classmethod
    def from_shapely(cls, poly: Polygon) -> "PolygonWithHoles":
        # road-interior-on-the-left: outer CCW, holes CW
        outer = SimplePolygon(_canonical_ring(poly.exterior.coords, ccw=True))
        holes = sorted(
            (SimplePolygon(_canonical_ring(r.coords, ccw=False)) for r in poly.interiors),
            key=lambda h: h.vertices[0],
        )
        return cls(outer, tuple(holes))

    @cached_property
    def _flat(self) -> tuple[np.ndarray, np.ndarray]:
        rings = [r.coords for r in self.rings]
        offsets = np.zeros(len(rings) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(r) for r in rings])
        return np.ascontiguousarray(np.vstack(rings)), offsets


Region = Union[SimplePolygon, PolygonWithHoles]


@dataclass(frozen=True)
class Scene:
    """The planning world: map bounds, solid building blocks and road surface.

    ``roads`` holds the connected components of the road surface; a regular
    street grid yields a single component.
    """

    bounds: tuple[float, float, float, float]
    buildings: tuple[SimplePolygon, ...]
    roads: tuple[PolygonWithHoles, ...]
    origin: tuple[float, float] | None = field(default=None, compare=False)

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def road_area(self) -> float:
        return sum(r.area for r in self.roads)

    @cached_property
    def _building_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.buildings:
            return np.zeros((0, 2)), np.zeros(1, dtype=np.int64), np.zeros((0, 4))
        rings = [b.coords for b in self.buildings]
        offsets = np.zeros(len(rings) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(r) for r in rings])
        bbox = np.array([b.bbox for b in self.buildings], dtype=np.float64)
        return np.ascontiguousarray(np.vstack(rings)), offsets, bbox

    def road_contains(self, xs, ys) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        ys = np.atleast_1d(np.asarray(ys, dtype=np.float64))
        out = np.zeros(xs.shape, dtype=bool)
        for road in self.roads:
            out |= points_in_region(road, xs, ys)
        return out

    def blocked_from(self, a: Sequence[float], xs, ys, eps: float = EPS) -> np.ndarray:
        """Vector form of :func:`segment_blocked` from one endpoint to many."""
        xy, offsets, bbox = self._building_arrays
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        if len(offsets) < 2:
            return np.zeros(xs.shape, dtype=bool)
        res = kernels.segments_blocked(float(a[0]), float(a[1]), xs, ys, xy, offsets, bbox, eps)
        return np.asarray(res, dtype=bool)


def points_in_region(region: Region, xs, ys, eps: float = EPS) -> np.ndarray:
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    if isinstance(region, SimplePolygon):
        xy = np.ascontiguousarray(region.coords)
        offsets = np.array([0, len(xy)], dtype=np.int64)
    else:
        xy, offsets = region._flat
    return np.asarray(kernels.points_in_pwh(xs, ys, xy, offsets, eps), dtype=bool)


def contains_point(region: Region, p: Sequence[float], eps: float = EPS) -> bool:
    """True iff ``p`` lies in the closed outer ring and not strictly inside a hole."""
    return bool(points_in_region(region, [p[0]], [p[1]], eps)[0])


def segment_blocked(scene: Scene, a: Sequence[float], b: Sequence[float], eps: float = EPS) -> bool:
    """True iff the open segment (a, b) passes through a building interior."""
    return bool(scene.blocked_from(a, [b[0]], [b[1]], eps)[0])


def _polygons_of(geom) -> list[Polygon]:
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, MultiPolygon):
        return list(geom.geoms)
    return [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon) and not g.is_empty]


def clean_polygons(geom, what: str = "polygon", snap: bool = True) -> list[Polygon]:
    """Snap (optionally), drop slivers and collinear vertices; returns plain polygons."""
    if snap:
        geom = shapely.set_precision(geom, SNAP_GRID)
    out = []
    for poly in _polygons_of(geom):
        if poly.area < SLIVER_AREA:
            log.warning("dropping %s sliver of area %.3g m^2", what, poly.area)
            continue
        poly = poly.simplify(0)
        if not poly.is_empty:
            out.append(poly)
    return out


def union_polygons(polys: Sequence[SimplePolygon]) -> list[SimplePolygon]:
    """Merge touching or overlapping footprints into solid blocks.

    Holes produced by the union (courtyards) are filled; filling may swallow
    other blocks, so the union is repeated until stable. Output rings are CCW,
    start at their lexicographically smallest vertex and are sorted.

    Raises:
        GeometryError: when an input polygon is degenerate; the message names
            its index.
    """
    shapes = []
    for i, p in enumerate(polys):
        try:
            p.validate()
        except GeometryError as exc:
            raise GeometryError(f"polygon {i}: {exc}") from None
        shapes.append(p.to_shapely())
    if not shapes:
        return []
    # no snapping here: block areas stay exact
    parts = clean_polygons(shapely.unary_union(shapes), "building", snap=False)
    while True:
        filled = [Polygon(p.exterior) for p in parts]
        merged = clean_polygons(shapely.unary_union(filled), "building", snap=False)
        if len(merged) == len(parts) and all(not p.interiors for p in merged):
            parts = merged
            break
        parts = merged
    out = [SimplePolygon(_canonical_ring(p.exterior.coords, ccw=True)) for p in parts]
    return sorted(out, key=lambda s: s.vertices[0])
