"""Turn raw map data into a :class:`~rsuplan.geometry.Scene`.

Sources are OpenStreetMap XML extracts or the synthetic generators below.
Scenes round-trip through a JSON scene file::

    {
      "format": "rsuplan-scene",
      "version": 1,
      "bounds": [minx, miny, maxx, maxy],          # meters
      "origin": [lon0, lat0] | null,               # geodetic SW corner, if known
      "buildings": [[[x, y], ...], ...],           # solid blocks, CCW
      "roads": [{"outer": [[x, y], ...], "holes": [[[x, y], ...], ...]}, ...]
    }
"""

from __future__ import annotations

import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon, box

from .geometry import (
    GeometryError,
    PolygonWithHoles,
    Scene,
    SimplePolygon,
    clean_polygons,
    union_polygons,
)

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_008.8

# meters; lane count x ~3.5 m
DEFAULT_ROAD_WIDTHS = {
    "motorway": 21.0,
    "trunk": 14.0,
    "primary": 12.0,
    "secondary": 10.0,
    "tertiary": 8.0,
    "unclassified": 6.0,
    "residential": 6.0,
    "living_street": 5.0,
    "service": 4.0,
}
DEFAULT_ROAD_CLASSES = tuple(DEFAULT_ROAD_WIDTHS)


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class RawRoad:
    centerline: tuple[tuple[float, float], ...]
    width_m: float
    road_class: str = "residential"

    def __post_init__(self):
        if len(self.centerline) < 2:
            raise IngestError("road centerline needs at least 2 points")
        if not self.width_m > 0:
            raise IngestError("road width must be positive")


@dataclass(frozen=True)
class RawBuilding:
    footprint: SimplePolygon


def _road_class(tag: str) -> str:
    return tag[:-5] if tag.endswith("_link") else tag


def _parse_width(value: str | None) -> float | None:
    if not value:
        return None
    txt = value.strip().lower().replace(",", ".")
    for suffix in ("meters", "metres", "meter", "metre", "m"):
        if txt.endswith(suffix):
            txt = txt[: -len(suffix)].strip()
            break
    try:
        w = float(txt)
    except ValueError:
        return None
    return w if w > 0 else None


class _Projector:
    """Equirectangular projection about the window center, origin at its SW corner."""

    def __init__(self, window: Sequence[float]):
        self.min_lon, self.min_lat, self.max_lon, self.max_lat = map(float, window)
        lat_c = math.radians(0.5 * (self.min_lat + self.max_lat))
        self.kx = EARTH_RADIUS_M * math.cos(lat_c) * math.pi / 180.0
        self.ky = EARTH_RADIUS_M * math.pi / 180.0

    def __call__(self, lon: float, lat: float) -> tuple[float, float]:
        return ((lon - self.min_lon) * self.kx, (lat - self.min_lat) * self.ky)

    def inverse(self, x: float, y: float) -> tuple[float, float]:
        return (self.min_lon + x / self.kx, self.min_lat + y / self.ky)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        x1, y1 = self(self.max_lon, self.max_lat)
        return (0.0, 0.0, x1, y1)


def window_bounds(window: Sequence[float]) -> tuple[float, float, float, float]:
    """Local-meter bounds of a geodetic window after projection."""
    return _Projector(window).bounds


def local_to_lonlat(origin: Sequence[float], bounds: Sequence[float], x: float, y: float):
    """Inverse of the ingest projection for a scene with a geodetic origin."""
    lon0, lat0 = origin
    lat_c = math.radians(lat0 + 0.5 * (bounds[3] - bounds[1]) / (EARTH_RADIUS_M * math.pi / 180.0))
    kx = EARTH_RADIUS_M * math.cos(lat_c) * math.pi / 180.0
    ky = EARTH_RADIUS_M * math.pi / 180.0
    return (lon0 + x / kx, lat0 + y / ky)


def _byte_offset(path: Path, line: int, col: int) -> int:
    with open(path, "rb") as fh:
        offset = 0
        for i, raw in enumerate(fh, start=1):
            if i == line:
                return offset + col
            offset += len(raw)
    return offset


def ingest_osm(
    source: str | Path,
    window: Sequence[float],
    road_classes: Iterable[str] = DEFAULT_ROAD_CLASSES,
    road_widths: dict[str, float] | None = None,
) -> tuple[list[RawBuilding], list[RawRoad]]:
    """Read buildings and drivable roads from an OSM XML extract.

    ``window`` is ``(min_lon, min_lat, max_lon, max_lat)``. Coordinates come
    back in map-local meters with the window's SW corner at the origin.
    Building ways and multipolygon relations contribute their outer rings,
    clipped to the window.
    """
    path = Path(source)
    widths = dict(DEFAULT_ROAD_WIDTHS)
    widths.update(road_widths or {})
    classes = set(road_classes)
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        line, col = exc.position
        raise IngestError(f"cannot parse {path}: {exc} (byte offset {_byte_offset(path, line, col)})") from None

    proj = _Projector(window)
    nodes: dict[str, tuple[float, float]] = {}
    for nd in root.iter("node"):
        nodes[nd.get("id")] = proj(float(nd.get("lon")), float(nd.get("lat")))

    def way_points(way) -> list[tuple[float, float]]:
        return [nodes[r.get("ref")] for r in way.iter("nd") if r.get("ref") in nodes]

    ways = {}
    window_box = box(*proj.bounds)
    buildings: list[RawBuilding] = []
    roads: list[RawRoad] = []

    def add_footprint(pts):
        if len(pts) < 4 or pts[0] != pts[-1]:
            return
        poly = Polygon(pts)
        if not poly.is_valid:
            poly = shapely.make_valid(poly)
        for part in clean_polygons(poly.intersection(window_box), "building"):
            buildings.append(RawBuilding(SimplePolygon.from_coords(part.exterior.coords)))

    for way in root.iter("way"):
        ways[way.get("id")] = way
        tags = {t.get("k"): t.get("v") for t in way.iter("tag")}
        pts = way_points(way)
        if "building" in tags:
            add_footprint(pts)
        elif "highway" in tags:
            cls = _road_class(tags["highway"])
            if cls not in classes or len(pts) < 2:
                continue
            width = _parse_width(tags.get("width")) or widths.get(cls, 6.0)
            line = LineString(pts)
            if not line.intersects(window_box):
                continue
            roads.append(RawRoad(tuple(pts), width, cls))

    for rel in root.iter("relation"):
        tags = {t.get("k"): t.get("v") for t in rel.iter("tag")}
        if "building" not in tags or tags.get("type") != "multipolygon":
            continue
        for m in rel.iter("member"):
            if m.get("type") == "way" and m.get("role", "outer") == "outer" and m.get("ref") in ways:
                add_footprint(way_points(ways[m.get("ref")]))

    x1, y1 = proj.bounds[2], proj.bounds[3]
    if not any(0.0 <= x <= x1 and 0.0 <= y <= y1 for x, y in nodes.values()):
        raise IngestError("no features in window")
    if not buildings and not roads:
        log.warning("no buildings or drivable roads in %s", path)
    return buildings, roads


def build_scene(
    buildings: Sequence[RawBuilding],
    roads: Sequence[RawRoad],
    bounds: Sequence[float],
    origin: tuple[float, float] | None = None,
) -> Scene:
    """Union footprints into solid blocks and buffered roads into the road surface.

    Roads are buffered to their width with flat caps and mitred joins; the
    building blocks are cut out of the road surface so every road point is
    physically reachable.
    """
    if not roads:
        raise IngestError("no roads given")
    frame = box(*bounds)
    clipped = []
    for i, b in enumerate(buildings):
        try:
            b.footprint.validate()
        except GeometryError as exc:
            raise GeometryError(f"building {i}: {exc}") from None
        for part in clean_polygons(b.footprint.to_shapely().intersection(frame), "building"):
            clipped.append(SimplePolygon.from_coords(part.exterior.coords))
    blocks = union_polygons(clipped)

    road_shapes = [
        LineString(r.centerline).buffer(r.width_m / 2.0, cap_style="flat", join_style="mitre")
        for r in roads
    ]
    surface = shapely.unary_union(road_shapes).intersection(frame)
    if blocks:
        surface = surface.difference(shapely.unary_union([b.to_shapely() for b in blocks]))
    parts = clean_polygons(surface, "road")
    if not parts:
        raise IngestError("no road surface in bounds")
    road_pwhs = sorted((PolygonWithHoles.from_shapely(p) for p in parts), key=lambda r: r.outer.vertices[0])
    return Scene(tuple(map(float, bounds)), tuple(blocks), tuple(road_pwhs), origin)


def scene_from_blocks(bounds: Sequence[float], blocks: Sequence[SimplePolygon]) -> Scene:
    """Scene whose road surface is everything in ``bounds`` outside the blocks."""
    merged = union_polygons(list(blocks))
    frame = box(*bounds)
    surface = frame.difference(shapely.unary_union([b.to_shapely() for b in merged])) if merged else frame
    parts = clean_polygons(surface, "road")
    roads = sorted((PolygonWithHoles.from_shapely(p) for p in parts), key=lambda r: r.outer.vertices[0])
    return Scene(tuple(map(float, bounds)), tuple(merged), tuple(roads))


def _check_grid_args(n: int, m: int, block: float, road: float) -> None:
    if n < 1 or m < 1:
        raise ValueError("grid needs at least 1x1 blocks")
    if not (block > 0 and road > 0):
        raise ValueError("block size and road width must be positive")


def generate_synthetic_grid(n: int, m: int, block_size: float = 90.0, road_width: float = 10.0) -> Scene:
    """Manhattan-style scene: ``n`` x ``m`` square blocks separated by uniform roads."""
    _check_grid_args(n, m, block_size, road_width)
    pitch = block_size + road_width
    w = n * block_size + (n + 1) * road_width
    h = m * block_size + (m + 1) * road_width
    blocks = []
    for i in range(n):
        for j in range(m):
            x0 = road_width + i * pitch
            y0 = road_width + j * pitch
            blocks.append(SimplePolygon.rectangle(x0, y0, x0 + block_size, y0 + block_size))
    blocks.sort(key=lambda b: b.vertices[0])
    outer = SimplePolygon.rectangle(0.0, 0.0, w, h)
    holes = tuple(b.canonical(ccw=False) for b in blocks)
    return Scene((0.0, 0.0, w, h), tuple(blocks), (PolygonWithHoles(outer, holes),))


def generate_irregular_grid(
    n: int,
    m: int,
    block_size: float = 90.0,
    road_width: float = 10.0,
    jitter: float = 25.0,
    extra_vertices: int = 4,
    seed: int = 0,
) -> Scene:
    """Grid scene whose blocks are randomly perturbed polygons.

    Every block keeps its cell but its outline gets ``extra_vertices`` extra
    points per side and each vertex is pushed inward by up to ``jitter``
    meters, giving irregular street widths and oblique building faces.
    """
    _check_grid_args(n, m, block_size, road_width)
    if not 0 <= jitter < block_size / 2:
        raise ValueError("jitter must be in [0, block_size/2)")
    rng = np.random.default_rng(seed)
    pitch = block_size + road_width
    w = n * block_size + (n + 1) * road_width
    h = m * block_size + (m + 1) * road_width
    blocks = []
    for i in range(n):
        for j in range(m):
            x0 = road_width + i * pitch
            y0 = road_width + j * pitch
            pts = []
            corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
            for side in range(4):
                cx, cy = corners[side]
                nx, ny = corners[(side + 1) % 4]
                fracs = [0.0] + sorted(rng.uniform(0.15, 0.85, extra_vertices).tolist())
                for f in fracs:
                    u = cx + f * (nx - cx)
                    v = cy + f * (ny - cy)
                    # push toward the block center
                    du, dv = 0.5 - u, 0.5 - v
                    norm = math.hypot(du, dv)
                    push = rng.uniform(0.0, jitter)
                    pts.append((
                        x0 + u * block_size + push * du / norm,
                        y0 + v * block_size + push * dv / norm,
                    ))
            poly = Polygon(pts)
            if not poly.is_valid:
                poly = poly.convex_hull
            blocks.append(SimplePolygon.from_coords(poly.exterior.coords))
    return scene_from_blocks((0.0, 0.0, w, h), blocks)


def plus_sign_scene(arm: float = 45.0, width: float = 10.0) -> Scene:
    """Two crossing roads with a building in each quadrant."""
    size = 2 * arm + width
    c = size / 2.0
    roads = [
        RawRoad(((0.0, c), (size, c)), width, "secondary"),
        RawRoad(((c, 0.0), (c, size)), width, "secondary"),
    ]
    blocks = [
        RawBuilding(SimplePolygon.rectangle(0.0, 0.0, arm, arm)),
        RawBuilding(SimplePolygon.rectangle(arm + width, 0.0, size, arm)),
        RawBuilding(SimplePolygon.rectangle(0.0, arm + width, arm, size)),
        RawBuilding(SimplePolygon.rectangle(arm + width, arm + width, size, size)),
    ]
    return build_scene(blocks, roads, (0.0, 0.0, size, size))


def scene_to_dict(scene: Scene) -> dict:
    return {
        "format": "rsuplan-scene",
        "version": 1,
        "bounds": list(scene.bounds),
        "origin": list(scene.origin) if scene.origin else None,
        "buildings": [[list(v) for v in b.vertices] for b in scene.buildings],
        "roads": [
            {
                "outer": [list(v) for v in r.outer.vertices],
                "holes": [[list(v) for v in h.vertices] for h in r.holes],
            }
            for r in scene.roads
        ],
    }


def scene_from_dict(data: dict) -> Scene:
    if data.get("format") != "rsuplan-scene":
        raise IngestError("not an rsuplan scene file")
    buildings = tuple(SimplePolygon.from_coords(b) for b in data["buildings"])
    roads = tuple(
        PolygonWithHoles(
            SimplePolygon.from_coords(r["outer"]),
            tuple(SimplePolygon.from_coords(h) for h in r.get("holes", [])),
        )
        for r in data["roads"]
    )
    for i, b in enumerate(buildings):
        try:
            b.validate()
        except GeometryError as exc:
            raise GeometryError(f"building {i}: {exc}") from None
    if not roads:
        raise IngestError("scene has no road surface")
    origin = tuple(data["origin"]) if data.get("origin") else None
    return Scene(tuple(map(float, data["bounds"])), buildings, roads, origin)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=1))


def load_scene(path: str | Path) -> Scene:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IngestError(f"cannot parse scene file {path}: {exc}") from None
    return scene_from_dict(data)
