"""Rectangular space-time observation windows and the geometry behind
edge-correction weights: boundary distances, erosion, translation overlaps,
and exact circular-arc clipping against an axis-aligned rectangle.

All operations are pure and accept scalars or numpy arrays where it makes
sense.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

STPoint = namedtuple("STPoint", ["sx", "sy", "t"])

_HALF_PI = 0.5 * np.pi
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class STWindow:
    """Axis-aligned spatial rectangle times a time interval."""

    x_range: tuple
    y_range: tuple
    t_range: tuple

    def __post_init__(self):
        for name in ("x_range", "y_range", "t_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
                raise ValueError(f"{name} must be a finite interval of positive length")

    @property
    def lx(self):
        return self.x_range[1] - self.x_range[0]

    @property
    def ly(self):
        return self.y_range[1] - self.y_range[0]

    @property
    def lt(self):
        return self.t_range[1] - self.t_range[0]

    @property
    def spatial_area(self):
        return self.lx * self.ly

    @property
    def volume(self):
        return self.lx * self.ly * self.lt

    def contains(self, sx, sy, t):
        """Vectorized membership test, boundary inclusive."""
        return (
            (sx >= self.x_range[0]) & (sx <= self.x_range[1])
            & (sy >= self.y_range[0]) & (sy <= self.y_range[1])
            & (t >= self.t_range[0]) & (t <= self.t_range[1])
        )


def unit_cube():
    return STWindow((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))


def boundary_dist_spatial(sx, sy, window):
    """Distance from interior point(s) to the spatial rectangle boundary."""
    d = np.minimum(
        np.minimum(sx - window.x_range[0], window.x_range[1] - sx),
        np.minimum(sy - window.y_range[0], window.y_range[1] - sy),
    )
    if np.any(d < 0):
        raise ValueError("point outside the spatial window")
    return d


def boundary_dist_temporal(t, window):
    """Distance from time point(s) to the nearest end of the time interval."""
    d = np.minimum(t - window.t_range[0], window.t_range[1] - t)
    if np.any(d < 0):
        raise ValueError("time outside the observation interval")
    return d


def erode(window, u, v):
    """Trim a margin of width u off the spatial sides and v off the time
    interval.  Returns None when any interval collapses."""
    if u < 0 or v < 0:
        raise ValueError("margins must be non-negative")
    x = (window.x_range[0] + u, window.x_range[1] - u)
    y = (window.y_range[0] + u, window.y_range[1] - u)
    t = (window.t_range[0] + v, window.t_range[1] - v)
    if x[1] <= x[0] or y[1] <= y[0] or t[1] <= t[0]:
        return None
    return STWindow(x, y, t)


def translation_overlap(window, h):
    """(area, duration) of the window intersected with itself shifted by
    h = (hx, hy, ht).  Symmetric in h -> -h."""
    hx, hy, ht = h
    area = max(window.lx - abs(hx), 0.0) * max(window.ly - abs(hy), 0.0)
    duration = max(window.lt - abs(ht), 0.0)
    return area, duration


def circle_arc_fractions(cx, cy, r, window):
    """Vectorized fraction of the circle |s - c| = r lying inside the spatial
    rectangle, by exact arc clipping.  Centers must be inside the rectangle;
    entries with r == 0 return 1."""
    cx = np.asarray(cx, dtype=float)
    cy = np.asarray(cy, dtype=float)
    r = np.asarray(r, dtype=float)
    dl = cx - window.x_range[0]
    dr = window.x_range[1] - cx
    db = cy - window.y_range[0]
    dt = window.y_range[1] - cy
    rs = np.where(r > 0, r, 1.0)

    def alpha(d):
        return np.arccos(np.clip(d / rs, -1.0, 1.0))

    al, ar, ab, at = alpha(dl), alpha(dr), alpha(db), alpha(dt)
    outside = 2.0 * (al + ar + ab + at)
    for a, b in ((al, ab), (al, at), (ar, ab), (ar, at)):
        outside -= np.maximum(a + b - _HALF_PI, 0.0)
    frac = np.clip(1.0 - outside / _TWO_PI, 0.0, 1.0)
    return np.where(r > 0, frac, 1.0)


def circle_proportion_inside(center, r, window):
    """Fraction in (0, 1] of the circle of radius r centred at an interior
    point whose arc lies inside the spatial rectangle."""
    cx, cy = center
    if r <= 0:
        raise ValueError("radius must be positive")
    if not (
        window.x_range[0] <= cx <= window.x_range[1]
        and window.y_range[0] <= cy <= window.y_range[1]
    ):
        raise ValueError("circle center outside the spatial window")
    return float(circle_arc_fractions(cx, cy, r, window))


def temporal_weights(ti, tj, window):
    """Vectorized interval weight: 1 when [t_i - |dt|, t_i + |dt|] fits inside
    the time interval, 1/2 otherwise."""
    delta = np.abs(np.asarray(ti) - np.asarray(tj))
    inside = (ti - delta >= window.t_range[0]) & (ti + delta <= window.t_range[1])
    return np.where(inside, 1.0, 0.5)


def temporal_weight(t_i, t_j, window):
    """Scalar form of :func:`temporal_weights`."""
    if not (window.t_range[0] <= t_i <= window.t_range[1]
            and window.t_range[0] <= t_j <= window.t_range[1]):
        raise ValueError("times outside the observation interval")
    return float(temporal_weights(t_i, t_j, window))
