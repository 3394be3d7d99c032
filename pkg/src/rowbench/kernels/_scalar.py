"""Scalar helpers written in the numba-compatible subset of Python.

Used as-is by the numpy backend and compiled by the numba backend.
"""

import math


def point_ellipse_distance(ex, ey, px, py):
    """Distance from ``(px, py)`` to the boundary of the axis-aligned ellipse
    with semi-axes ``ex``, ``ey`` centred at the origin.

    Bisection on the Lagrange multiplier of the closest-point problem,
    folded into the first quadrant. Exact to the bisection floor.
    """
    y0 = abs(px)
    y1 = abs(py)
    e0 = ex
    e1 = ey
    if e0 < e1:
        e0, e1 = e1, e0
        y0, y1 = y1, y0
    if y1 > 0.0:
        if y0 > 0.0:
            z0 = y0 / e0
            z1 = y1 / e1
            g = z0 * z0 + z1 * z1 - 1.0
            if g == 0.0:
                return 0.0
            r0 = (e0 / e1) * (e0 / e1)
            n0 = r0 * z0
            # bisect on t = s + 1 rather than s: for points hugging the
            # major axis the root sits at t ~ z1, far below the spacing of
            # floats near s = -1
            t0 = z1
            t1 = 1.0 if g < 0.0 else math.hypot(n0, z1)
            t = t0
            for _ in range(1200):  # enough halvings to reach subnormal t
                t = 0.5 * (t0 + t1)
                if t == t0 or t == t1:
                    break
                ratio0 = n0 / (t + (r0 - 1.0))
                ratio1 = z1 / t
                g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0
                if g > 0.0:
                    t0 = t
                elif g < 0.0:
                    t1 = t
                else:
                    break
            x0 = r0 * y0 / (t + (r0 - 1.0))
            x1 = y1 / t
            return math.hypot(x0 - y0, x1 - y1)
        return abs(y1 - e1)
    numer0 = e0 * y0
    denom0 = e0 * e0 - e1 * e1
    if numer0 < denom0:
        xde0 = numer0 / denom0
        x0 = e0 * xde0
        x1 = e1 * math.sqrt(1.0 - xde0 * xde0)
        return math.hypot(x0 - y0, x1)
    return abs(y0 - e0)
