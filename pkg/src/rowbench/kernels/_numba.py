"""Compiled kernels. Same arithmetic, in the same order, as ``_numpy``."""

import math

import numpy as np
from numba import njit

from ._scalar import point_ellipse_distance as _ped_py

_OPTS = dict(cache=True, nogil=True)

point_ellipse_distance = njit(**_OPTS)(_ped_py)


@njit(**_OPTS)
def _quadratic_nonneg(A, B, C):
    """Intervals of s where A s^2 + B s + C >= 0, as (count, lo1, hi1, lo2, hi2)."""
    inf = np.inf
    if A == 0.0:
        if B == 0.0:
            if C >= 0.0:
                return 1, -inf, inf, 0.0, 0.0
            return 0, 0.0, 0.0, 0.0, 0.0
        if B > 0.0:
            return 1, -C / B, inf, 0.0, 0.0
        return 1, -inf, -C / B, 0.0, 0.0
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        if A > 0.0:
            return 1, -inf, inf, 0.0, 0.0
        return 0, 0.0, 0.0, 0.0, 0.0
    sq = math.sqrt(disc)
    if B >= 0.0:
        qq = -0.5 * (B + sq)
    else:
        qq = -0.5 * (B - sq)
    if qq == 0.0:
        r1 = 0.0
        r2 = 0.0
    else:
        r1 = qq / A
        r2 = C / qq
    if r1 > r2:
        r1, r2 = r2, r1
    if A < 0.0:
        return 1, r1, r2, 0.0, 0.0
    return 2, -inf, r1, r2, inf


@njit(**_OPTS)
def _first_col(lo, cx, W):
    # smallest i with i + 0.5 - cx >= lo
    if lo < -cx - 1.0:
        return 0
    if lo > cx + 1.0:
        return W
    i = int(math.ceil(lo + cx - 0.5))
    if (i - 1) + 0.5 - cx >= lo:
        i -= 1
    if i + 0.5 - cx < lo:
        i += 1
    return min(max(i, 0), W)


@njit(**_OPTS)
def _last_col(hi, cx, W):
    # largest i with i + 0.5 - cx <= hi
    if hi > cx + 1.0:
        return W - 1
    if hi < -cx - 1.0:
        return -1
    i = int(math.floor(hi + cx - 0.5))
    if (i + 1) + 0.5 - cx <= hi:
        i += 1
    if i + 0.5 - cx > hi:
        i -= 1
    return min(max(i, -1), W - 1)


@njit(**_OPTS)
def _cull(px, py, pz, rad, rot, cam, focal, cx, cy, max_range):
    """Bounding-sphere frustum test: (visible, straddles max_range)."""
    dx = px - cam[0]
    dy = py - cam[1]
    dz = pz - cam[2]
    fx = rot[0, 0] * dx + rot[1, 0] * dy + rot[2, 0] * dz
    ly = rot[0, 1] * dx + rot[1, 1] * dy + rot[2, 1] * dz
    uz = rot[0, 2] * dx + rot[1, 2] * dy + rot[2, 2] * dz
    dist = math.sqrt(fx * fx + ly * ly + uz * uz)
    if dist - rad > max_range:
        return False, False
    if fx < -rad:
        return False, False
    nh = math.sqrt(cx * cx + focal * focal)
    if (cx * fx - focal * ly) / nh < -rad or (cx * fx + focal * ly) / nh < -rad:
        return False, False
    nv = math.sqrt(cy * cy + focal * focal)
    if (cy * fx - focal * uz) / nv < -rad or (cy * fx + focal * uz) / nv < -rad:
        return False, False
    return True, dist + rad > max_range


@njit(**_OPTS)
def _box_rows_cols(x0, x1, y0, y1, z0, z1, rot, cam, focal, cx, cy, W, H):
    vmin = np.inf
    vmax = -np.inf
    umin = np.inf
    umax = -np.inf
    for k in range(8):
        x = x1 if (k & 1) else x0
        y = y1 if (k & 2) else y0
        z = z1 if (k & 4) else z0
        dx = x - cam[0]
        dy = y - cam[1]
        dz = z - cam[2]
        fx = rot[0, 0] * dx + rot[1, 0] * dy + rot[2, 0] * dz
        if fx <= 1e-9:
            return 0, H - 1, 0, W - 1
        ly = rot[0, 1] * dx + rot[1, 1] * dy + rot[2, 1] * dz
        uz = rot[0, 2] * dx + rot[1, 2] * dy + rot[2, 2] * dz
        u = cx - focal * ly / fx
        v = cy - focal * uz / fx
        vmin = min(vmin, v)
        vmax = max(vmax, v)
        umin = min(umin, u)
        umax = max(umax, u)
    j0 = max(0, int(math.floor(vmin - 0.5)))
    j1 = min(H - 1, int(math.ceil(vmax - 0.5)))
    i0 = max(0, int(math.floor(umin - 0.5)))
    i1 = min(W - 1, int(math.ceil(umax - 0.5)))
    return j0, j1, i0, i1


@njit(**_OPTS)
def _ellipsoid(e, rot, cam, focal, max_range, out):
    H, W = out.shape
    cx = W / 2.0
    cy = H / 2.0
    a, b, c = e[3], e[4], e[5]
    rad = max(a, max(b, c))
    visible, ranged = _cull(e[0], e[1], e[2], rad, rot, cam, focal, cx, cy, max_range)
    if not visible:
        return
    j0, j1, _, _ = _box_rows_cols(e[0] - a, e[0] + a, e[1] - b, e[1] + b, e[2] - c, e[2] + c,
                                  rot, cam, focal, cx, cy, W, H)
    ox = (cam[0] - e[0]) / a
    oy = (cam[1] - e[1]) / b
    oz = (cam[2] - e[2]) / c
    c0 = ox * ox + oy * oy + oz * oz - 1.0
    qx = -rot[0, 1] / a
    qy = -rot[1, 1] / b
    qz = -rot[2, 1] / c
    a1 = ox * qx + oy * qy + oz * qz
    b2 = qx * qx + qy * qy + qz * qz
    for j in range(j0, j1 + 1):
        if c0 <= 0.0:
            out[j, :] = 1
            continue
        t = j + 0.5 - cy
        Fx = focal * rot[0, 0] - t * rot[0, 2]
        Fy = focal * rot[1, 0] - t * rot[1, 2]
        Fz = focal * rot[2, 0] - t * rot[2, 2]
        px = Fx / a
        py = Fy / b
        pz = Fz / c
        a0 = ox * px + oy * py + oz * pz
        b0 = px * px + py * py + pz * pz
        b1 = 2.0 * (px * qx + py * qy + pz * qz)
        A = a1 * a1 - b2 * c0
        B = 2.0 * a0 * a1 - b1 * c0
        C = a0 * a0 - b0 * c0
        n, lo1, hi1, lo2, hi2 = _quadratic_nonneg(A, B, C)
        for m in range(n):
            lo = lo1 if m == 0 else lo2
            hi = hi1 if m == 0 else hi2
            # the hit must lie in front of the camera: o'.d' < 0
            if a1 > 0.0:
                hi = min(hi, -a0 / a1)
            elif a1 < 0.0:
                lo = max(lo, -a0 / a1)
            elif a0 >= 0.0:
                continue
            i0 = _first_col(lo, cx, W)
            i1 = _last_col(hi, cx, W)
            if i1 < i0:
                continue
            if not ranged:
                out[j, i0:i1 + 1] = 1
                continue
            for i in range(i0, i1 + 1):
                s = i + 0.5 - cx
                dd = b0 + b1 * s + b2 * s * s
                hb = a0 + a1 * s
                disc = hb * hb - dd * c0
                if disc < 0.0:
                    continue
                lam = (-hb - math.sqrt(disc)) / dd
                wx = Fx - s * rot[0, 1]
                wy = Fy - s * rot[1, 1]
                wz = Fz - s * rot[2, 1]
                if lam * math.sqrt(wx * wx + wy * wy + wz * wz) <= max_range:
                    out[j, i] = 1


@njit(**_OPTS)
def _cylinder(cyl, rot, cam, focal, max_range, out):
    H, W = out.shape
    cx = W / 2.0
    cy = H / 2.0
    bx, by, bz, r, h = cyl[0], cyl[1], cyl[2], cyl[3], cyl[4]
    rad = math.sqrt(r * r + 0.25 * h * h)
    visible, ranged = _cull(bx, by, bz + 0.5 * h, rad, rot, cam, focal, cx, cy, max_range)
    if not visible:
        return
    j0, j1, i0, i1 = _box_rows_cols(bx - r, bx + r, by - r, by + r, bz, bz + h,
                                    rot, cam, focal, cx, cy, W, H)
    ox = cam[0] - bx
    oy = cam[1] - by
    oz = cam[2]
    cc = ox * ox + oy * oy - r * r
    z0 = bz
    z1 = bz + h
    for j in range(j0, j1 + 1):
        t = j + 0.5 - cy
        Fx = focal * rot[0, 0] - t * rot[0, 2]
        Fy = focal * rot[1, 0] - t * rot[1, 2]
        Fz = focal * rot[2, 0] - t * rot[2, 2]
        for i in range(i0, i1 + 1):
            if out[j, i]:
                continue
            s = i + 0.5 - cx
            wx = Fx - s * rot[0, 1]
            wy = Fy - s * rot[1, 1]
            wz = Fz - s * rot[2, 1]
            aa = wx * wx + wy * wy
            if aa == 0.0:
                if cc > 0.0:
                    continue
                tl = -np.inf
                th = np.inf
            else:
                bb = 2.0 * (ox * wx + oy * wy)
                disc = bb * bb - 4.0 * aa * cc
                if disc < 0.0:
                    continue
                sq = math.sqrt(disc)
                tl = (-bb - sq) / (2.0 * aa)
                th = (-bb + sq) / (2.0 * aa)
            if wz == 0.0:
                if oz < z0 or oz > z1:
                    continue
                zl = -np.inf
                zh = np.inf
            else:
                zl = (z0 - oz) / wz
                zh = (z1 - oz) / wz
                if zl > zh:
                    zl, zh = zh, zl
            lo = max(max(tl, zl), 0.0)
            hi = min(th, zh)
            if lo > hi:
                continue
            if ranged and lo * math.sqrt(wx * wx + wy * wy + wz * wz) > max_range:
                continue
            out[j, i] = 1


@njit(**_OPTS)
def render(ellipsoids, cylinders, cam, rot, focal, max_range, out):
    """Rasterise primitive silhouettes into the zeroed uint8 image ``out``."""
    for k in range(ellipsoids.shape[0]):
        _ellipsoid(ellipsoids[k], rot, cam, focal, max_range, out)
    for k in range(cylinders.shape[0]):
        _cylinder(cylinders[k], rot, cam, focal, max_range, out)
    return out


@njit(**_OPTS)
def column_histogram(pixels):
    H, W = pixels.shape
    hist = np.zeros(W, dtype=np.int64)
    for j in range(H):
        for i in range(W):
            hist[i] += pixels[j, i]
    return hist


@njit(**_OPTS)
def free_cluster(hist, threshold):
    """Longest run with hist <= threshold; ties by centre distance then start. (-1, -1) if none."""
    W = hist.shape[0]
    best_s = -1
    best_e = -1
    best_len = 0
    best_off = 0
    i = 0
    while i < W:
        if hist[i] > threshold:
            i += 1
            continue
        s = i
        while i < W and hist[i] <= threshold:
            i += 1
        e = i - 1
        ln = e - s + 1
        off = abs(s + e + 1 - W)  # twice the centre distance, exact
        if ln > best_len or (ln == best_len and off < best_off):
            best_s, best_e, best_len, best_off = s, e, ln, off
    return best_s, best_e


@njit(**_OPTS)
def disc_hits(x, y, radius, plants, obstacles):
    """True if the disc touches any plant footprint ellipse or obstacle circle.

    ``plants`` rows are (x, y, half_length, half_width); ``obstacles`` rows (x, y, r).
    """
    for k in range(obstacles.shape[0]):
        dx = x - obstacles[k, 0]
        dy = y - obstacles[k, 1]
        rr = radius + obstacles[k, 2]
        if dx * dx + dy * dy <= rr * rr:
            return True
    for k in range(plants.shape[0]):
        dx = abs(x - plants[k, 0])
        dy = abs(y - plants[k, 1])
        ex = plants[k, 2]
        ey = plants[k, 3]
        if dx > ex + radius or dy > ey + radius:
            continue
        if (dx / ex) ** 2 + (dy / ey) ** 2 <= 1.0:
            return True
        if point_ellipse_distance(ex, ey, dx, dy) <= radius:
            return True
    return False
