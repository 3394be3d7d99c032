"""Vectorised numpy kernels mirroring ``_numba`` operation for operation."""

import numpy as np

from ._scalar import point_ellipse_distance


def _quadratic_nonneg(A, B, C):
    inf = np.inf
    n = np.zeros(A.shape, dtype=np.int64)
    lo1 = np.zeros(A.shape)
    hi1 = np.zeros(A.shape)
    lo2 = np.zeros(A.shape)
    hi2 = np.zeros(A.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = A == 0.0
        # linear / constant
        const = lin & (B == 0.0)
        m = const & (C >= 0.0)
        n[m], lo1[m], hi1[m] = 1, -inf, inf
        m = lin & (B > 0.0)
        n[m], lo1[m], hi1[m] = 1, -C[m] / B[m], inf
        m = lin & (B < 0.0)
        n[m], lo1[m], hi1[m] = 1, -inf, -C[m] / B[m]

        quad = ~lin
        disc = B * B - 4.0 * A * C
        m = quad & (disc < 0.0) & (A > 0.0)
        n[m], lo1[m], hi1[m] = 1, -inf, inf
        real = quad & (disc >= 0.0)
        sq = np.sqrt(np.where(real, disc, 0.0))
        qq = np.where(B >= 0.0, -0.5 * (B + sq), -0.5 * (B - sq))
        zero = qq == 0.0
        r1 = np.where(zero, 0.0, qq / A)
        r2 = np.where(zero, 0.0, C / qq)
        r1, r2 = np.minimum(r1, r2), np.maximum(r1, r2)
        m = real & (A < 0.0)
        n[m], lo1[m], hi1[m] = 1, r1[m], r2[m]
        m = real & (A > 0.0)
        n[m], lo1[m], hi1[m], lo2[m], hi2[m] = 2, -inf, r1[m], r2[m], inf
    return n, lo1, hi1, lo2, hi2


def _first_col(lo, cx, W):
    inner = np.clip(lo, -cx - 1.0, cx + 1.0)
    i = np.ceil(inner + cx - 0.5).astype(np.int64)
    i = np.where((i - 1) + 0.5 - cx >= inner, i - 1, i)
    i = np.where(i + 0.5 - cx < inner, i + 1, i)
    i = np.clip(i, 0, W)
    i = np.where(lo < -cx - 1.0, 0, i)
    return np.where(lo > cx + 1.0, W, i)


def _last_col(hi, cx, W):
    inner = np.clip(hi, -cx - 1.0, cx + 1.0)
    i = np.floor(inner + cx - 0.5).astype(np.int64)
    i = np.where((i + 1) + 0.5 - cx <= inner, i + 1, i)
    i = np.where(i + 0.5 - cx > inner, i - 1, i)
    i = np.clip(i, -1, W - 1)
    i = np.where(hi > cx + 1.0, W - 1, i)
    return np.where(hi < -cx - 1.0, -1, i)


def _cull(centers, rad, rot, cam, focal, cx, cy, max_range):
    d = centers - cam
    fx = rot[0, 0] * d[:, 0] + rot[1, 0] * d[:, 1] + rot[2, 0] * d[:, 2]
    ly = rot[0, 1] * d[:, 0] + rot[1, 1] * d[:, 1] + rot[2, 1] * d[:, 2]
    uz = rot[0, 2] * d[:, 0] + rot[1, 2] * d[:, 1] + rot[2, 2] * d[:, 2]
    dist = np.sqrt(fx * fx + ly * ly + uz * uz)
    nh = np.sqrt(cx * cx + focal * focal)
    nv = np.sqrt(cy * cy + focal * focal)
    visible = ~(
        (dist - rad > max_range)
        | (fx < -rad)
        | ((cx * fx - focal * ly) / nh < -rad)
        | ((cx * fx + focal * ly) / nh < -rad)
        | ((cy * fx - focal * uz) / nv < -rad)
        | ((cy * fx + focal * uz) / nv < -rad)
    )
    return visible, dist + rad > max_range


def _box_rows_cols(lo, hi, rot, cam, focal, cx, cy, W, H):
    corners = np.array([[hi[0] if k & 1 else lo[0], hi[1] if k & 2 else lo[1], hi[2] if k & 4 else lo[2]]
                        for k in range(8)])
    d = corners - cam
    fx = rot[0, 0] * d[:, 0] + rot[1, 0] * d[:, 1] + rot[2, 0] * d[:, 2]
    if np.any(fx <= 1e-9):
        return 0, H - 1, 0, W - 1
    ly = rot[0, 1] * d[:, 0] + rot[1, 1] * d[:, 1] + rot[2, 1] * d[:, 2]
    uz = rot[0, 2] * d[:, 0] + rot[1, 2] * d[:, 1] + rot[2, 2] * d[:, 2]
    u = cx - focal * ly / fx
    v = cy - focal * uz / fx
    j0 = max(0, int(np.floor(v.min() - 0.5)))
    j1 = min(H - 1, int(np.ceil(v.max() - 0.5)))
    i0 = max(0, int(np.floor(u.min() - 0.5)))
    i1 = min(W - 1, int(np.ceil(u.max() - 0.5)))
    return j0, j1, i0, i1


def _ellipsoid(e, ranged, rot, cam, focal, max_range, out):
    H, W = out.shape
    cx = W / 2.0
    cy = H / 2.0
    a, b, c = e[3], e[4], e[5]
    j0, j1, _, _ = _box_rows_cols(e[:3] - e[3:], e[:3] + e[3:], rot, cam, focal, cx, cy, W, H)
    if j1 < j0:
        return
    ox = (cam[0] - e[0]) / a
    oy = (cam[1] - e[1]) / b
    oz = (cam[2] - e[2]) / c
    c0 = ox * ox + oy * oy + oz * oz - 1.0
    if c0 <= 0.0:
        out[j0:j1 + 1, :] = 1
        return
    qx = -rot[0, 1] / a
    qy = -rot[1, 1] / b
    qz = -rot[2, 1] / c
    a1 = ox * qx + oy * qy + oz * qz
    b2 = qx * qx + qy * qy + qz * qz
    t = np.arange(j0, j1 + 1) + 0.5 - cy
    Fx = focal * rot[0, 0] - t * rot[0, 2]
    Fy = focal * rot[1, 0] - t * rot[1, 2]
    Fz = focal * rot[2, 0] - t * rot[2, 2]
    px = Fx / a
    py = Fy / b
    pz = Fz / c
    a0 = ox * px + oy * py + oz * pz
    b0 = px * px + py * py + pz * pz
    b1 = 2.0 * (px * qx + py * qy + pz * qz)
    A = np.full(t.shape, a1 * a1 - b2 * c0)
    B = 2.0 * a0 * a1 - b1 * c0
    C = a0 * a0 - b0 * c0
    n, lo1, hi1, lo2, hi2 = _quadratic_nonneg(A, B, C)
    cols = np.arange(W)
    hit = np.zeros((t.size, W), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for m, lo, hi in ((0, lo1, hi1), (1, lo2, hi2)):
            ok = n > m
            if a1 > 0.0:
                hi = np.minimum(hi, -a0 / a1)
            elif a1 < 0.0:
                lo = np.maximum(lo, -a0 / a1)
            else:
                ok = ok & ~(a0 >= 0.0)
            i0 = _first_col(lo, cx, W)
            i1 = _last_col(hi, cx, W)
            ok = ok & (i1 >= i0)
            hit |= ok[:, None] & (cols >= i0[:, None]) & (cols <= i1[:, None])
        if ranged and hit.any():
            s = cols + 0.5 - cx
            dd = b0[:, None] + b1[:, None] * s + b2 * s * s
            hb = a0[:, None] + a1 * s
            disc = hb * hb - dd * c0
            lam = (-hb - np.sqrt(disc)) / dd
            wx = Fx[:, None] - s * rot[0, 1]
            wy = Fy[:, None] - s * rot[1, 1]
            wz = Fz[:, None] - s * rot[2, 1]
            hit &= (disc >= 0.0) & (lam * np.sqrt(wx * wx + wy * wy + wz * wz) <= max_range)
    out[j0:j1 + 1][hit] = 1


def _cylinder(cyl, ranged, rot, cam, focal, max_range, out):
    H, W = out.shape
    cx = W / 2.0
    cy = H / 2.0
    bx, by, bz, r, h = cyl
    j0, j1, i0, i1 = _box_rows_cols(np.array([bx - r, by - r, bz]), np.array([bx + r, by + r, bz + h]),
                                    rot, cam, focal, cx, cy, W, H)
    if j1 < j0 or i1 < i0:
        return
    ox = cam[0] - bx
    oy = cam[1] - by
    oz = cam[2]
    cc = ox * ox + oy * oy - r * r
    z0 = bz
    z1 = bz + h
    t = (np.arange(j0, j1 + 1) + 0.5 - cy)[:, None]
    s = (np.arange(i0, i1 + 1) + 0.5 - cx)[None, :]
    Fx = focal * rot[0, 0] - t * rot[0, 2]
    Fy = focal * rot[1, 0] - t * rot[1, 2]
    Fz = focal * rot[2, 0] - t * rot[2, 2]
    wx = Fx - s * rot[0, 1]
    wy = Fy - s * rot[1, 1]
    wz = Fz - s * rot[2, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        aa = wx * wx + wy * wy
        bb = 2.0 * (ox * wx + oy * wy)
        disc = bb * bb - 4.0 * aa * cc
        sq = np.sqrt(disc)
        vert = aa == 0.0
        tl = np.where(vert, -np.inf, (-bb - sq) / (2.0 * aa))
        th = np.where(vert, np.inf, (-bb + sq) / (2.0 * aa))
        side_ok = np.where(vert, cc <= 0.0, disc >= 0.0)
        flat = wz == 0.0
        za = (z0 - oz) / wz
        zb = (z1 - oz) / wz
        zl = np.where(flat, -np.inf, np.minimum(za, zb))
        zh = np.where(flat, np.inf, np.maximum(za, zb))
        slab_ok = np.where(flat, (oz >= z0) & (oz <= z1), True)
        lo = np.maximum(np.maximum(tl, zl), 0.0)
        hi = np.minimum(th, zh)
        hit = side_ok & slab_ok & (lo <= hi)
        if ranged:
            hit &= ~(lo * np.sqrt(wx * wx + wy * wy + wz * wz) > max_range)
    out[j0:j1 + 1, i0:i1 + 1][hit] = 1


def render(ellipsoids, cylinders, cam, rot, focal, max_range, out):
    H, W = out.shape
    cx = W / 2.0
    cy = H / 2.0
    if ellipsoids.shape[0]:
        rad = np.maximum(ellipsoids[:, 3], np.maximum(ellipsoids[:, 4], ellipsoids[:, 5]))
        vis, ranged = _cull(ellipsoids[:, :3], rad, rot, cam, focal, cx, cy, max_range)
        for k in np.flatnonzero(vis):
            _ellipsoid(ellipsoids[k], bool(ranged[k]), rot, cam, focal, max_range, out)
    if cylinders.shape[0]:
        r, h = cylinders[:, 3], cylinders[:, 4]
        rad = np.sqrt(r * r + 0.25 * h * h)
        centers = cylinders[:, :3].copy()
        centers[:, 2] = cylinders[:, 2] + 0.5 * h
        vis, ranged = _cull(centers, rad, rot, cam, focal, cx, cy, max_range)
        for k in np.flatnonzero(vis):
            _cylinder(cylinders[k], bool(ranged[k]), rot, cam, focal, max_range, out)
    return out


def column_histogram(pixels):
    return pixels.sum(axis=0, dtype=np.int64)


def free_cluster(hist, threshold):
    W = hist.shape[0]
    free = np.concatenate(([False], hist <= threshold, [False]))
    edges = np.flatnonzero(np.diff(free.astype(np.int8)))
    if edges.size == 0:
        return -1, -1
    starts, ends = edges[0::2], edges[1::2] - 1
    lengths = ends - starts + 1
    off = np.abs(starts + ends + 1 - W)
    # lexsort: last key is primary
    k = np.lexsort((starts, off, -lengths))[0]
    return int(starts[k]), int(ends[k])


def disc_hits(x, y, radius, plants, obstacles):
    if obstacles.shape[0]:
        dx = x - obstacles[:, 0]
        dy = y - obstacles[:, 1]
        rr = radius + obstacles[:, 2]
        if np.any(dx * dx + dy * dy <= rr * rr):
            return True
    if not plants.shape[0]:
        return False
    dx = np.abs(x - plants[:, 0])
    dy = np.abs(y - plants[:, 1])
    ex, ey = plants[:, 2], plants[:, 3]
    near = ~((dx > ex + radius) | (dy > ey + radius))
    if not near.any():
        return False
    dx, dy, ex, ey = dx[near], dy[near], ex[near], ey[near]
    if np.any((dx / ex) ** 2 + (dy / ey) ** 2 <= 1.0):
        return True
    return any(point_ellipse_distance(a, b, u, v) <= radius
               for a, b, u, v in zip(ex.tolist(), ey.tolist(), dx.tolist(), dy.tolist()))
