"""Second-order summary estimators for spatio-temporal point patterns.

``k_hat`` accumulates, for every grid cell (u, v), the intensity-weighted
count of ordered pairs within spatial distance u and temporal lag v;
``g_hat`` is the box-kernel density analogue with a 1/(4 pi u) prefactor.
Both support five edge-correction regimes.  Undefined entries (empty eroded
point set under the border correction, pair-correlation columns with
u < h_s) are NaN, never zero.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _accel
from .geometry import (
    boundary_dist_spatial,
    boundary_dist_temporal,
    circle_arc_fractions,
    temporal_weights,
)


class EdgeCorrection(Enum):
    NONE = "none"
    ISOTROPIC = "isotropic"
    BORDER = "border"
    MODIFIED_BORDER = "modified_border"
    TRANSLATION = "translation"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown edge correction '{name}' (valid: {valid})") from None


ALL_CORRECTIONS = tuple(EdgeCorrection)


@dataclass(frozen=True)
class EvalGrid:
    """Strictly increasing positive spatial distances u and temporal lags v."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("u", "v"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size == 0 or arr[0] <= 0 or np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} values must be strictly increasing and positive")
            object.__setattr__(self, name, arr)


def default_grid():
    """Distances 0.01 to 0.25 in steps of 0.01, both axes."""
    r = np.linspace(0.01, 0.25, 25)
    return EvalGrid(r, r.copy())


@dataclass
class SecondOrderSurface:
    statistic: str  # "K" or "g"
    grid: EvalGrid
    values: np.ndarray  # (len(u), len(v)); NaN marks undefined entries
    correction: EdgeCorrection
    intensity_source: str = "true"


def _event_rates(pattern, intensity):
    if hasattr(intensity, "at_points"):
        lam = np.asarray(intensity.at_points(pattern), dtype=float)
    else:
        lam = np.asarray(intensity, dtype=float)
    if lam.shape != (pattern.n,):
        raise ValueError("intensity values must match the number of events")
    bad = np.nonzero(~(lam > 0))[0]
    if bad.size:
        raise ValueError(f"non-positive intensity at event {bad[0]}")
    return lam


def _eroded_volumes(window, grid):
    """|S eroded by u| and |T eroded by v| along the grid axes; non-positive
    values mark an empty erosion."""
    su = (window.lx - 2.0 * grid.u) * (window.ly - 2.0 * grid.u)
    su[(window.lx - 2.0 * grid.u <= 0) | (window.ly - 2.0 * grid.u <= 0)] = 0.0
    tv = np.maximum(window.lt - 2.0 * grid.v, 0.0)
    return su, tv


class _PairContext:
    """Close pairs of one pattern with everything the corrections reuse."""

    def __init__(self, pattern, lam, grid, h_s=0.0, h_t=0.0):
        self.pattern = pattern
        self.window = pattern.window
        self.lam = lam
        self.grid = grid
        i, j, ds, dt = _accel.close_pairs(
            pattern.sx, pattern.sy, pattern.t,
            grid.u[-1] + h_s, grid.v[-1] + h_t,
        )
        self.i, self.j, self.ds, self.dta = i, j, ds, np.abs(dt)
        self.inv_ll = 1.0 / (lam[i] * lam[j])
        self.bd = boundary_dist_spatial(pattern.sx, pattern.sy, self.window)
        self.bt = boundary_dist_temporal(pattern.t, self.window)

    def translation_weights(self):
        dx = np.abs(self.pattern.sx[self.i] - self.pattern.sx[self.j])
        dy = np.abs(self.pattern.sy[self.i] - self.pattern.sy[self.j])
        ov_s = (self.window.lx - dx) * (self.window.ly - dy)
        ov_t = self.window.lt - self.dta
        if np.any(ov_s <= 0) or np.any(ov_t <= 0):
            raise ValueError("pair displacement exceeds the window size")
        return ov_s * ov_t

    def isotropic_weights(self):
        """Per-orientation weights |W| * w_t * w_s, centred at i and at j."""
        w = self.window
        ti, tj = self.pattern.t[self.i], self.pattern.t[self.j]
        out = []
        for c, o, tc, to in ((self.i, self.j, ti, tj), (self.j, self.i, tj, ti)):
            ws = circle_arc_fractions(self.pattern.sx[c], self.pattern.sy[c], self.ds, w)
            wt = temporal_weights(tc, to, w)
            out.append(w.volume * wt * ws)
        return out


def _lo_indices(grid_vals, x):
    # first grid index with value >= x (pair starts counting there)
    return np.searchsorted(grid_vals, x, side="left")


def _lt_counts(grid_vals, x):
    # number of grid values strictly below x (erosion indicators are strict)
    return np.searchsorted(grid_vals, x, side="left")


def _border_denominator(ctx):
    """Sum over events of 1{deep enough at (u, v)} / intensity."""
    nu, nv = ctx.grid.u.size, ctx.grid.v.size
    hi_u = _lt_counts(ctx.grid.u, ctx.bd) - 1
    hi_v = _lt_counts(ctx.grid.v, ctx.bt) - 1
    zeros = np.zeros(ctx.pattern.n, dtype=np.int64)
    return _accel.rect_scatter(zeros, hi_u, zeros, hi_v, 1.0 / ctx.lam, nu, nv)


def _pair_rects_k(ctx):
    lo_u = _lo_indices(ctx.grid.u, ctx.ds)
    lo_v = _lo_indices(ctx.grid.v, ctx.dta)
    nu, nv = ctx.grid.u.size, ctx.grid.v.size
    keep = (lo_u < nu) & (lo_v < nv)
    return keep, lo_u, lo_v


def _k_table(ctx, correction):
    """Raw K-estimate table plus a mask of undefined cells."""
    nu, nv = ctx.grid.u.size, ctx.grid.v.size
    keep, lo_u, lo_v = _pair_rects_k(ctx)
    full_u = np.full(keep.sum(), nu - 1, dtype=np.int64)
    full_v = np.full(keep.sum(), nv - 1, dtype=np.int64)
    lo_u, lo_v = lo_u[keep], lo_v[keep]
    inv_ll = ctx.inv_ll[keep]
    undefined = np.zeros((nu, nv), dtype=bool)

    if correction is EdgeCorrection.NONE:
        w = 2.0 * inv_ll / ctx.window.volume
        return _accel.rect_scatter(lo_u, full_u, lo_v, full_v, w, nu, nv), undefined

    if correction is EdgeCorrection.TRANSLATION:
        w = 2.0 * inv_ll / ctx.translation_weights()[keep]
        return _accel.rect_scatter(lo_u, full_u, lo_v, full_v, w, nu, nv), undefined

    if correction is EdgeCorrection.ISOTROPIC:
        w_i, w_j = ctx.isotropic_weights()
        w = inv_ll * (1.0 / w_i[keep] + 1.0 / w_j[keep])
        return _accel.rect_scatter(lo_u, full_u, lo_v, full_v, w, nu, nv), undefined

    # border and modified border: each orientation of a pair contributes on
    # the cells where the centre event survives the erosion
    acc = np.zeros((nu, nv))
    for c in (ctx.i, ctx.j):
        hi_u = np.minimum(full_u, _lt_counts(ctx.grid.u, ctx.bd[c][keep]) - 1)
        hi_v = np.minimum(full_v, _lt_counts(ctx.grid.v, ctx.bt[c][keep]) - 1)
        acc += _accel.rect_scatter(lo_u, hi_u, lo_v, hi_v, inv_ll, nu, nv)

    if correction is EdgeCorrection.MODIFIED_BORDER:
        su, tv = _eroded_volumes(ctx.window, ctx.grid)
        denom = su[:, None] * tv[None, :]
    else:
        denom = _border_denominator(ctx)
    undefined = denom <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        table = acc / denom
    table[undefined] = np.nan
    return table, undefined


def _g_table(ctx, correction, h_s, h_t):
    nu, nv = ctx.grid.u.size, ctx.grid.v.size
    lo_u = _lo_indices(ctx.grid.u, ctx.ds - h_s)
    hi_u = np.searchsorted(ctx.grid.u, ctx.ds + h_s, side="right") - 1
    lo_v = _lo_indices(ctx.grid.v, ctx.dta - h_t)
    hi_v = np.searchsorted(ctx.grid.v, ctx.dta + h_t, side="right") - 1
    undefined = np.zeros((nu, nv), dtype=bool)

    if correction is EdgeCorrection.NONE:
        w = 2.0 * ctx.inv_ll / ctx.window.volume
        acc = _accel.rect_scatter(lo_u, hi_u, lo_v, hi_v, w, nu, nv)
    elif correction is EdgeCorrection.TRANSLATION:
        w = 2.0 * ctx.inv_ll / ctx.translation_weights()
        acc = _accel.rect_scatter(lo_u, hi_u, lo_v, hi_v, w, nu, nv)
    elif correction is EdgeCorrection.ISOTROPIC:
        w_i, w_j = ctx.isotropic_weights()
        w = ctx.inv_ll * (1.0 / w_i + 1.0 / w_j)
        acc = _accel.rect_scatter(lo_u, hi_u, lo_v, hi_v, w, nu, nv)
    else:
        acc = np.zeros((nu, nv))
        for c in (ctx.i, ctx.j):
            cu = np.minimum(hi_u, _lt_counts(ctx.grid.u, ctx.bd[c]) - 1)
            cv = np.minimum(hi_v, _lt_counts(ctx.grid.v, ctx.bt[c]) - 1)
            acc += _accel.rect_scatter(lo_u, cu, lo_v, cv, ctx.inv_ll, nu, nv)
        if correction is EdgeCorrection.MODIFIED_BORDER:
            su, tv = _eroded_volumes(ctx.window, ctx.grid)
            denom = su[:, None] * tv[None, :]
        else:
            denom = _border_denominator(ctx)
        undefined = denom <= 0
        with np.errstate(divide="ignore", invalid="ignore"):
            acc = acc / denom
        acc[undefined] = np.nan

    kernel_mass = 4.0 * h_s * h_t
    table = acc / (4.0 * np.pi * ctx.grid.u[:, None] * kernel_mass)
    table[ctx.grid.u < h_s, :] = np.nan  # prefactor 1/u meets kernel support at 0
    undefined |= (ctx.grid.u < h_s)[:, None]
    return table, undefined


def second_order_surfaces(pattern, intensity, corrections, statistics,
                          grid=None, h_s=0.01, h_t=0.01):
    """All requested (statistic, correction) surfaces for one pattern,
    sharing a single close-pair extraction.  Returns a dict keyed by
    (statistic, correction)."""
    if pattern.n == 0:
        raise ValueError("pattern must contain at least one event")
    grid = grid or default_grid()
    lam = _event_rates(pattern, intensity)
    source = getattr(intensity, "source", "custom")
    want_g = "g" in statistics
    ctx = _PairContext(pattern, lam, grid,
                       h_s if want_g else 0.0, h_t if want_g else 0.0)
    out = {}
    for corr in corrections:
        if "K" in statistics:
            table, _ = _k_table(ctx, corr)
            out[("K", corr)] = SecondOrderSurface("K", grid, table, corr, source)
        if want_g:
            table, _ = _g_table(ctx, corr, h_s, h_t)
            out[("g", corr)] = SecondOrderSurface("g", grid, table, corr, source)
    return out


def k_hat(pattern, intensity, correction, grid=None):
    """Edge-corrected space-time K estimate on the grid."""
    correction = EdgeCorrection(correction)
    return second_order_surfaces(pattern, intensity, [correction], ["K"], grid)[
        ("K", correction)
    ]


def g_hat(pattern, intensity, correction, grid=None, h_s=0.01, h_t=0.01):
    """Edge-corrected pair correlation estimate with box kernels."""
    correction = EdgeCorrection(correction)
    return second_order_surfaces(
        pattern, intensity, [correction], ["g"], grid, h_s, h_t
    )[("g", correction)]


def pair_weight(x_i, x_j, window, correction, u=None, v=None,
                pattern=None, intensity=None):
    """Edge-correction weight w_ij for a single ordered pair.

    Border and modified border need (u, v) and, for border, the full pattern
    with its intensity values.  Returns inf when the centre event fails the
    erosion indicator (the pair then contributes nothing).
    """
    correction = EdgeCorrection(correction)
    ds = float(np.hypot(x_i.sx - x_j.sx, x_i.sy - x_j.sy))
    if correction is EdgeCorrection.NONE:
        return window.volume
    if correction is EdgeCorrection.TRANSLATION:
        area, dur = (
            (window.lx - abs(x_i.sx - x_j.sx)) * (window.ly - abs(x_i.sy - x_j.sy)),
            window.lt - abs(x_i.t - x_j.t),
        )
        return area * dur
    if correction is EdgeCorrection.ISOTROPIC:
        ws = circle_arc_fractions(x_i.sx, x_i.sy, ds, window)
        wt = temporal_weights(x_i.t, x_j.t, window)
        return float(window.volume * wt * ws)

    if u is None or v is None:
        raise ValueError("border corrections require the (u, v) arguments")
    inside = (
        float(boundary_dist_spatial(x_i.sx, x_i.sy, window)) > u
        and float(boundary_dist_temporal(x_i.t, window)) > v
    )
    if correction is EdgeCorrection.MODIFIED_BORDER:
        eroded_s = (window.lx - 2 * u) * (window.ly - 2 * u)
        eroded_t = window.lt - 2 * v
        if eroded_s <= 0 or eroded_t <= 0:
            raise ValueError("eroded window is empty at this (u, v)")
        return eroded_s * eroded_t if inside else np.inf
    # border
    if pattern is None or intensity is None:
        raise ValueError("border correction requires the pattern and intensity")
    lam = _event_rates(pattern, intensity)
    bd = boundary_dist_spatial(pattern.sx, pattern.sy, window)
    bt = boundary_dist_temporal(pattern.t, window)
    num = float(np.sum(((bd > u) & (bt > v)) / lam))
    return num if inside else np.inf


def k_from_g(surface):
    """Integrate a pair-correlation surface into a K surface: the cumulative
    trapezoidal integral of 2 pi g u' over [0,u] x [-v,v], using the even
    symmetry in the temporal lag and constant extrapolation of g to lag 0."""
    if surface.statistic != "g":
        raise ValueError("k_from_g expects a pair-correlation surface")
    u, v = surface.grid.u, surface.grid.v
    g = surface.values
    # integrand g * u' on the grid extended by u'=0 (integrand 0) and v'=0
    f = np.zeros((u.size + 1, v.size + 1))
    f[1:, 1:] = g * u[:, None]
    f[1:, 0] = g[:, 0] * u
    u0 = np.concatenate([[0.0], u])
    v0 = np.concatenate([[0.0], v])
    du = np.diff(u0)[:, None]
    cum_u = np.vstack([
        np.zeros((1, f.shape[1])),
        np.cumsum(0.5 * (f[1:, :] + f[:-1, :]) * du, axis=0),
    ])
    dv = np.diff(v0)[None, :]
    cum_uv = np.hstack([
        np.zeros((cum_u.shape[0], 1)),
        np.cumsum(0.5 * (cum_u[:, 1:] + cum_u[:, :-1]) * dv, axis=1),
    ])
    values = 4.0 * np.pi * cum_uv[1:, 1:]
    return SecondOrderSurface("K", surface.grid, values, surface.correction,
                              surface.intensity_source)


# ---------------------------------------------------------------------------
# surface serialization
# ---------------------------------------------------------------------------

def write_surface(surface, path):
    """Long-format CSV with NA for undefined entries."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("u,v,value,statistic,correction,intensity_source\n")
        for a, uu in enumerate(surface.grid.u):
            for b, vv in enumerate(surface.grid.v):
                val = surface.values[a, b]
                txt = "NA" if np.isnan(val) else repr(float(val))
                fh.write(
                    f"{uu!r},{vv!r},{txt},{surface.statistic},"
                    f"{surface.correction.value},{surface.intensity_source}\n"
                )


def read_surface(path):
    us, vs, vals = [], [], []
    stat = corr = source = None
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            u, v, val, stat, corr, source = line.rstrip("\n").split(",")
            us.append(float(u))
            vs.append(float(v))
            vals.append(np.nan if val == "NA" else float(val))
    u = np.array(sorted(set(us)))
    v = np.array(sorted(set(vs)))
    values = np.full((u.size, v.size), np.nan)
    ia = np.searchsorted(u, us)
    ib = np.searchsorted(v, vs)
    values[ia, ib] = vals
    grid = EvalGrid(u, v)
    return SecondOrderSurface(stat, grid, values, EdgeCorrection(corr), source)
