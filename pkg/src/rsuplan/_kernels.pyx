# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry hot loops; see _kernels_py for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline long _winding(double px, double py, const double[:, ::1] xy,
                          Py_ssize_t start, Py_ssize_t stop) noexcept nogil:
    cdef long wn = 0
    cdef Py_ssize_t j, k
    cdef double x0, y0, x1, y1, is_left
    for j in range(start, stop):
        k = j + 1
        if k == stop:
            k = start
        x0 = xy[j, 0]; y0 = xy[j, 1]
        x1 = xy[k, 0]; y1 = xy[k, 1]
        is_left = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        if y0 <= py:
            if y1 > py and is_left > 0:
                wn += 1
        elif y1 <= py and is_left < 0:
            wn -= 1
    return wn


cdef inline double _distance(double px, double py, const double[:, ::1] xy,
                             Py_ssize_t start, Py_ssize_t stop) noexcept nogil:
    cdef double best = INFINITY
    cdef double x0, y0, ex, ey, ll, t, ddx, ddy, d
    cdef Py_ssize_t j, k
    for j in range(start, stop):
        k = j + 1
        if k == stop:
            k = start
        x0 = xy[j, 0]; y0 = xy[j, 1]
        ex = xy[k, 0] - x0; ey = xy[k, 1] - y0
        ll = ex * ex + ey * ey
        if ll == 0.0:
            t = 0.0
        else:
            t = ((px - x0) * ex + (py - y0) * ey) / ll
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        ddx = px - (x0 + t * ex); ddy = py - (y0 + t * ey)
        d = sqrt(ddx * ddx + ddy * ddy)
        if d < best:
            best = d
    return best


cdef inline bint _strictly_inside(double px, double py, const double[:, ::1] xy,
                                  Py_ssize_t start, Py_ssize_t stop, double eps) noexcept nogil:
    if _winding(px, py, xy, start, stop) == 0:
        return False
    return _distance(px, py, xy, start, stop) > eps


def points_in_pwh(px, py, xy, offsets, double eps):
    cdef const double[::1] vx = np.ascontiguousarray(px, dtype=np.float64)
    cdef const double[::1] vy = np.ascontiguousarray(py, dtype=np.float64)
    cdef const double[:, ::1] ring = np.ascontiguousarray(xy, dtype=np.float64).reshape(-1, 2)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t m = vx.shape[0]
    cdef Py_ssize_t nr = off.shape[0] - 1
    out = np.zeros(m, dtype=np.uint8)
    cdef unsigned char[::1] res = out
    cdef Py_ssize_t i, k
    cdef double x, y
    cdef bint inside
    if nr < 1:
        return out
    with nogil:
        for i in range(m):
            x = vx[i]; y = vy[i]
            inside = (_winding(x, y, ring, off[0], off[1]) != 0
                      or _distance(x, y, ring, off[0], off[1]) <= eps)
            if inside:
                for k in range(1, nr):
                    if _strictly_inside(x, y, ring, off[k], off[k + 1], eps):
                        inside = False
                        break
            res[i] = 1 if inside else 0
    return out


cdef inline double _clamp01(double t) noexcept nogil:
    if t < 0.0:
        return 0.0
    if t > 1.0:
        return 1.0
    return t


cdef bint _segment_hits(double ax, double ay, double bx, double by,
                        const double[:, ::1] xy, Py_ssize_t start, Py_ssize_t stop,
                        double eps, double* ts) noexcept nogil:
    cdef double dx = bx - ax, dy = by - ay
    cdef double length = sqrt(dx * dx + dy * dy)
    cdef double l2, t_eps, px_, py_, qx_, qy_, dp, dq, tp, tq, s, cx, cy, t, tmp, tm
    cdef Py_ssize_t nt = 2, j, k, a, b
    cdef bint on_p, on_q
    if length <= eps:
        return False
    l2 = length * length
    t_eps = eps / length
    ts[0] = 0.0
    ts[1] = 1.0
    for j in range(start, stop):
        k = j + 1
        if k == stop:
            k = start
        px_ = xy[j, 0]; py_ = xy[j, 1]
        qx_ = xy[k, 0]; qy_ = xy[k, 1]
        dp = (dx * (py_ - ay) - dy * (px_ - ax)) / length
        dq = (dx * (qy_ - ay) - dy * (qx_ - ax)) / length
        on_p = fabs(dp) <= eps
        on_q = fabs(dq) <= eps
        if on_p or on_q:
            if on_p:
                tp = ((px_ - ax) * dx + (py_ - ay) * dy) / l2
                if tp >= -t_eps and tp <= 1.0 + t_eps:
                    ts[nt] = _clamp01(tp); nt += 1
            if on_q:
                tq = ((qx_ - ax) * dx + (qy_ - ay) * dy) / l2
                if tq >= -t_eps and tq <= 1.0 + t_eps:
                    ts[nt] = _clamp01(tq); nt += 1
            continue
        if (dp > 0) == (dq > 0):
            continue
        s = dp / (dp - dq)
        cx = px_ + s * (qx_ - px_)
        cy = py_ + s * (qy_ - py_)
        t = ((cx - ax) * dx + (cy - ay) * dy) / l2
        if t < -t_eps or t > 1.0 + t_eps:
            continue
        if t > t_eps and t < 1.0 - t_eps:
            return True
        ts[nt] = _clamp01(t); nt += 1
    # insertion sort; lists are short
    for a in range(1, nt):
        tmp = ts[a]
        b = a - 1
        while b >= 0 and ts[b] > tmp:
            ts[b + 1] = ts[b]
            b -= 1
        ts[b + 1] = tmp
    for a in range(nt - 1):
        if ts[a + 1] - ts[a] > t_eps:
            tm = 0.5 * (ts[a] + ts[a + 1])
            if _strictly_inside(ax + tm * dx, ay + tm * dy, xy, start, stop, eps):
                return True
    return False


def segment_hits_polygon(double ax, double ay, double bx, double by, x, y, double eps):
    ring = np.ascontiguousarray(np.column_stack([x, y]), dtype=np.float64)
    cdef const double[:, ::1] xy = ring
    cdef Py_ssize_t n = xy.shape[0]
    cdef double* ts = <double*> malloc((2 * n + 4) * sizeof(double))
    cdef bint hit
    try:
        hit = _segment_hits(ax, ay, bx, by, xy, 0, n, eps, ts)
    finally:
        free(ts)
    return bool(hit)


def segments_blocked(double ax, double ay, bx, by, xy, offsets, bbox, double eps):
    cdef const double[::1] vx = np.ascontiguousarray(bx, dtype=np.float64)
    cdef const double[::1] vy = np.ascontiguousarray(by, dtype=np.float64)
    cdef const double[:, ::1] ring = np.ascontiguousarray(xy, dtype=np.float64).reshape(-1, 2)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[:, ::1] box = np.ascontiguousarray(bbox, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t m = vx.shape[0]
    cdef Py_ssize_t npoly = off.shape[0] - 1
    out = np.zeros(m, dtype=np.uint8)
    cdef unsigned char[::1] res = out
    cdef Py_ssize_t i, k, maxn = 0
    cdef double x, y, sminx, smaxx, sminy, smaxy
    cdef double* ts
    for k in range(npoly):
        if off[k + 1] - off[k] > maxn:
            maxn = off[k + 1] - off[k]
    ts = <double*> malloc((2 * maxn + 4) * sizeof(double))
    if ts == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                x = vx[i]; y = vy[i]
                sminx = ax if ax < x else x
                smaxx = ax if ax > x else x
                sminy = ay if ay < y else y
                smaxy = ay if ay > y else y
                for k in range(npoly):
                    if (smaxx < box[k, 0] - eps or sminx > box[k, 2] + eps
                            or smaxy < box[k, 1] - eps or sminy > box[k, 3] + eps):
                        continue
                    if _segment_hits(ax, ay, x, y, ring, off[k], off[k + 1], eps, ts):
                        res[i] = 1
                        break
    finally:
        free(ts)
    return out
