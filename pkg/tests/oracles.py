"""Independent reference implementations used only by the tests.

None of these import the package's kernels; they are slow, obvious
re-derivations of the same quantities.
"""

import math

import numpy as np


def crossing_parity(px, py, rings):
    """Even-odd ray casting (ray towards +x) over every ring of a region."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    for ring in rings:
        ring = np.asarray(ring, dtype=float)
        n = len(ring)
        for j in range(n):
            x0, y0 = ring[j - 1]
            x1, y1 = ring[j]
            straddle = (y0 > py) != (y1 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            inside ^= straddle & (px < xc)
    return inside


def distance_to_rings(px, py, rings):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    best = np.full(px.shape, np.inf)
    for ring in rings:
        ring = np.asarray(ring, dtype=float)
        for j in range(len(ring)):
            a = ring[j - 1]
            b = ring[j]
            ab = b - a
            t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / (ab @ ab), 0, 1)
            best = np.minimum(best, np.hypot(px - a[0] - t * ab[0], py - a[1] - t * ab[1]))
    return best


def sampled_blocked(a, b, buildings, samples=1000, margin=1e-9):
    """Blocked iff any of ``samples`` interior points of (a, b) lies strictly
    inside a building (parity inside and off the boundary)."""
    t = (np.arange(samples) + 0.5) / samples
    xs = a[0] + t * (b[0] - a[0])
    ys = a[1] + t * (b[1] - a[1])
    for ring in buildings:
        ins = crossing_parity(xs, ys, [ring]) & (distance_to_rings(xs, ys, [ring]) > margin)
        if ins.any():
            return True
    return False


def min_vertex_distance(a, b, buildings):
    """Smallest distance from any building vertex to segment (a, b)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ab = b - a
    best = math.inf
    for ring in buildings:
        for v in np.asarray(ring, float):
            t = min(max(((v - a) @ ab) / (ab @ ab), 0.0), 1.0)
            best = min(best, float(np.hypot(*(v - a - t * ab))))
    return best


def hand_rss(d, p_tx=10.0, g_tx=15.0, alpha=2.66, h_att=70.0, slope_per_km=40.0):
    """RSS written out term by term."""
    log_term = 10.0 * alpha * math.log10(max(d, 1.0))
    att = slope_per_km * (d / 1000.0) + h_att
    return p_tx + g_tx - (log_term + att)


def rect_union_area(r1, r2):
    """Inclusion-exclusion for two axis-aligned rectangles (x0, y0, x1, y1)."""
    area = lambda r: (r[2] - r[0]) * (r[3] - r[1])
    ix = max(0.0, min(r1[2], r2[2]) - max(r1[0], r2[0]))
    iy = max(0.0, min(r1[3], r2[3]) - max(r1[1], r2[1]))
    return area(r1) + area(r2) - ix * iy


def brute_coverage(scene_buildings, sites, tiles, blocked_fn):
    """Covered tile count from scratch: a tile counts if any site sees it."""
    count = 0
    for t in tiles:
        if any(not blocked_fn(s, t) for s in sites):
            count += 1
    return count


def running_mean_prefix(values, th):
    """Longest prefix of the descending-sorted values whose mean is >= th."""
    vals = sorted(values, reverse=True)
    best = 0
    total = 0.0
    for i, v in enumerate(vals, start=1):
        total += v
        if total / i >= th:
            best = i
    return best


def random_star(rng, cx, cy, r_min, r_max, n):
    """Star-shaped simple polygon, CCW, with ``n`` vertices."""
    # keep angular gaps open so the polygon stays simple
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False) + rng.uniform(-0.3, 0.3, n) * (2 * np.pi / n)
    r = rng.uniform(r_min, r_max, n)
    return [(cx + ri * math.cos(a), cy + ri * math.sin(a)) for ri, a in zip(r, ang)]


def random_rect(rng, lo, hi, min_side=2.0, max_side=40.0):
    w, h = rng.uniform(min_side, max_side, 2)
    x0 = rng.uniform(lo, hi - w)
    y0 = rng.uniform(lo, hi - h)
    return (x0, y0, x0 + w, y0 + h)
