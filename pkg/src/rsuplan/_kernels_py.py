"""Pure numpy fallback for the geometry hot loops.

Mirrors the signatures of the compiled ``_kernels`` extension exactly.
Polygons are passed flattened: ``xy`` holds every ring's vertices
back-to-back (closure implied) and ``offsets[k]:offsets[k+1]`` selects ring k.
"""

import numpy as np


def _ring_winding(px, py, x, y):
    wn = np.zeros(px.shape, dtype=np.int64)
    n = len(x)
    for j in range(n):
        x0, y0 = x[j], y[j]
        x1, y1 = x[(j + 1) % n], y[(j + 1) % n]
        is_left = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        up = (y0 <= py) & (y1 > py) & (is_left > 0)
        down = (y0 > py) & (y1 <= py) & (is_left < 0)
        wn += up
        wn -= down
    return wn


def _ring_distance(px, py, x, y):
    best = np.full(px.shape, np.inf)
    n = len(x)
    for j in range(n):
        x0, y0 = x[j], y[j]
        x1, y1 = x[(j + 1) % n], y[(j + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        ll = ex * ex + ey * ey
        if ll == 0.0:
            d = np.hypot(px - x0, py - y0)
        else:
            t = np.clip(((px - x0) * ex + (py - y0) * ey) / ll, 0.0, 1.0)
            d = np.hypot(px - (x0 + t * ex), py - (y0 + t * ey))
        np.minimum(best, d, out=best)
    return best


def points_in_pwh(px, py, xy, offsets, eps):
    """Closed-region membership for one polygon-with-holes (ring 0 is outer)."""
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    xy = np.asarray(xy, dtype=np.float64)
    out = np.zeros(px.shape, dtype=np.uint8)
    if len(offsets) < 2:
        return out
    x, y = xy[offsets[0]:offsets[1], 0], xy[offsets[0]:offsets[1], 1]
    inside = (_ring_winding(px, py, x, y) != 0) | (_ring_distance(px, py, x, y) <= eps)
    for k in range(1, len(offsets) - 1):
        hx, hy = xy[offsets[k]:offsets[k + 1], 0], xy[offsets[k]:offsets[k + 1], 1]
        sel = np.nonzero(inside)[0]
        if not len(sel):
            break
        qx, qy = px[sel], py[sel]
        strict = (_ring_winding(qx, qy, hx, hy) != 0) & (_ring_distance(qx, qy, hx, hy) > eps)
        inside[sel[strict]] = False
    out[inside] = 1
    return out


def _strictly_inside(px, py, x, y, eps):
    return (_ring_winding(px, py, x, y) != 0) & (_ring_distance(px, py, x, y) > eps)


def segment_hits_polygon(ax, ay, bx, by, x, y, eps):
    """Scalar test: does the open segment (a, b) meet the open interior of ring (x, y)?"""
    dx, dy = bx - ax, by - ay
    length = (dx * dx + dy * dy) ** 0.5
    if length <= eps:
        return False
    l2 = length * length
    t_eps = eps / length
    ts = [0.0, 1.0]
    n = len(x)
    for j in range(n):
        px_, py_ = x[j], y[j]
        qx_, qy_ = x[(j + 1) % n], y[(j + 1) % n]
        dp = (dx * (py_ - ay) - dy * (px_ - ax)) / length
        dq = (dx * (qy_ - ay) - dy * (qx_ - ax)) / length
        on_p = abs(dp) <= eps
        on_q = abs(dq) <= eps
        if on_p or on_q:
            if on_p:
                tp = ((px_ - ax) * dx + (py_ - ay) * dy) / l2
                if -t_eps <= tp <= 1.0 + t_eps:
                    ts.append(min(max(tp, 0.0), 1.0))
            if on_q:
                tq = ((qx_ - ax) * dx + (qy_ - ay) * dy) / l2
                if -t_eps <= tq <= 1.0 + t_eps:
                    ts.append(min(max(tq, 0.0), 1.0))
            continue
        if (dp > 0) == (dq > 0):
            continue
        s = dp / (dp - dq)
        cx = px_ + s * (qx_ - px_)
        cy = py_ + s * (qy_ - py_)
        t = ((cx - ax) * dx + (cy - ay) * dy) / l2
        if t < -t_eps or t > 1.0 + t_eps:
            continue
        if t_eps < t < 1.0 - t_eps:
            return True
        ts.append(min(max(t, 0.0), 1.0))
    ts.sort()
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    mids_x, mids_y = [], []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 > t_eps:
            tm = 0.5 * (t0 + t1)
            mids_x.append(ax + tm * dx)
            mids_y.append(ay + tm * dy)
    if not mids_x:
        return False
    return bool(_strictly_inside(np.array(mids_x), np.array(mids_y), xs, ys, eps).any())


def segments_blocked(ax, ay, bx, by, xy, offsets, bbox, eps):
    """For a fixed endpoint ``a`` and many endpoints ``b``, flag segments whose
    interior crosses the interior of any polygon."""
    bx = np.asarray(bx, dtype=np.float64)
    by = np.asarray(by, dtype=np.float64)
    xy = np.asarray(xy, dtype=np.float64)
    bbox = np.asarray(bbox, dtype=np.float64)
    m = len(bx)
    blocked = np.zeros(m, dtype=np.uint8)
    if m == 0:
        return blocked
    seg_minx = np.minimum(ax, bx)
    seg_maxx = np.maximum(ax, bx)
    seg_miny = np.minimum(ay, by)
    seg_maxy = np.maximum(ay, by)
    for k in range(len(offsets) - 1):
        x0, y0, x1, y1 = bbox[k]
        sel = np.nonzero(
            (blocked == 0)
            & (seg_maxx >= x0 - eps) & (seg_minx <= x1 + eps)
            & (seg_maxy >= y0 - eps) & (seg_miny <= y1 + eps)
        )[0]
        if not len(sel):
            continue
        ring = xy[offsets[k]:offsets[k + 1]]
        rx, ry = ring[:, 0], ring[:, 1]
        dx = bx[sel] - ax
        dy = by[sel] - ay
        length = np.hypot(dx, dy)
        live = length > eps
        length = np.where(live, length, 1.0)
        l2 = length * length
        t_eps = eps / length
        hit = np.zeros(len(sel), dtype=bool)
        special = np.zeros(len(sel), dtype=bool)
        n = len(rx)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(n):
                px_, py_ = rx[j], ry[j]
                qx_, qy_ = rx[(j + 1) % n], ry[(j + 1) % n]
                dp = (dx * (py_ - ay) - dy * (px_ - ax)) / length
                dq = (dx * (qy_ - ay) - dy * (qx_ - ax)) / length
                on_p = np.abs(dp) <= eps
                on_q = np.abs(dq) <= eps
                tp = ((px_ - ax) * dx + (py_ - ay) * dy) / l2
                tq = ((qx_ - ax) * dx + (qy_ - ay) * dy) / l2
                special |= on_p & (tp >= -t_eps) & (tp <= 1.0 + t_eps)
                special |= on_q & (tq >= -t_eps) & (tq <= 1.0 + t_eps)
                strict = ~on_p & ~on_q & ((dp > 0) != (dq > 0))
                s = dp / (dp - dq)
                cx = px_ + s * (qx_ - px_)
                cy = py_ + s * (qy_ - py_)
                t = ((cx - ax) * dx + (cy - ay) * dy) / l2
                inside_t = (t >= -t_eps) & (t <= 1.0 + t_eps)
                proper = strict & (t > t_eps) & (t < 1.0 - t_eps)
                hit |= proper
                special |= strict & inside_t & ~proper
        hit &= live
        special &= live & ~hit
        plain = live & ~hit & ~special
        if plain.any():
            idx = np.nonzero(plain)[0]
            mx = 0.5 * (ax + bx[sel[idx]])
            my = 0.5 * (ay + by[sel[idx]])
            hit[idx] = _strictly_inside(mx, my, rx, ry, eps)
        for i in np.nonzero(special)[0]:
            hit[i] = segment_hits_polygon(ax, ay, bx[sel[i]], by[sel[i]], rx, ry, eps)
        blocked[sel[hit]] = 1
    return blocked
