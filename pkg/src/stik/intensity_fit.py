"""First-order intensity estimation under space-time separability.

Two routes, combined multiplicatively into a :class:`ProductIntensity`:

* kernel: quartic spatial kernel with the per-event window-mass correction
  (so the spatial estimate integrates to n over the window) and bandwidth
  either fixed, or selected by minimising the disc-kernel mean squared error
  criterion computed from the pattern's empirical spatial K-function; the
  temporal factor is a Gaussian kernel with the rule-of-thumb bandwidth
  0.9 n^(-1/5) min(sd, IQR/1.34), renormalized to mass n.
* parametric: log-linear spatial model (order 1 or 2) fitted by quadrature
  reduction of the Poisson likelihood to a weighted GLM, and a one-parameter
  exponential temporal model fitted by maximum likelihood.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from . import _accel
from .geometry import boundary_dist_spatial, circle_arc_fractions
from .intensity import ProductIntensity, _gl_nodes

BANDWIDTH_GRID = np.exp(np.linspace(math.log(0.01), math.log(0.5), 64))


# ---------------------------------------------------------------------------
# bandwidths
# ---------------------------------------------------------------------------

def silverman_bandwidth(times, n=None):
    """Rule-of-thumb Gaussian bandwidth 0.9 n^(-1/5) min(sd, IQR/1.34).

    Sample standard deviation uses ddof=1; quartiles use the
    linear-interpolation definition.
    """
    times = np.asarray(times, dtype=float)
    if n is None:
        n = times.size
    if n < 2:
        raise ValueError("need at least two time points")
    sd = times.std(ddof=1)
    q1, q3 = np.percentile(times, [25, 75])
    spread = min(sd, (q3 - q1) / 1.34)
    if spread <= 0:
        raise ValueError("times have zero spread")
    return 0.9 * n ** (-0.2) * spread


def _disc_overlap_area(r, h):
    """Area of the intersection of two discs of radius h at distance r."""
    y = np.clip(r / (2.0 * h), 0.0, 1.0)
    return 2.0 * h * h * (np.arccos(y) - y * np.sqrt(1.0 - y * y))


def spatial_k_function(pattern, r):
    """Translation-corrected empirical K of the spatial projection."""
    w = pattern.window
    n = pattern.n
    i, j, d, _ = _accel.close_pairs(
        pattern.sx, pattern.sy, np.zeros(n), float(r[-1]), 1.0
    )
    dx = np.abs(pattern.sx[i] - pattern.sx[j])
    dy = np.abs(pattern.sy[i] - pattern.sy[j])
    ov = (w.lx - dx) * (w.ly - dy)
    lam2 = n * (n - 1) / w.spatial_area**2
    order = np.argsort(d)
    cw = np.concatenate([[0.0], np.cumsum(2.0 / ov[order] / lam2)])
    return cw[np.searchsorted(d[order], r, side="right")]


def berman_diggle_bandwidth(pattern, window=None, grid=None):
    """Bandwidth minimising the mean squared error of a disc-kernel intensity
    estimate of a stationary Cox process, expressed through the empirical
    K-function of the pattern; searched over a logarithmic grid."""
    if pattern.n < 10:
        raise ValueError("need at least 10 events to select a bandwidth")
    window = window or pattern.window
    grid = BANDWIDTH_GRID if grid is None else np.asarray(grid, dtype=float)
    lam = pattern.n / window.spatial_area
    r = np.linspace(0.0, 2.0 * grid[-1], 257)
    khat = spatial_k_function(pattern, r)
    dk = np.diff(khat)
    rmid = 0.5 * (r[1:] + r[:-1])

    disc = np.pi * grid**2
    a = _disc_overlap_area(rmid[None, :], grid[:, None])
    m = (
        1.0 / (lam * disc)
        + (a * dk[None, :]).sum(axis=1) / disc**2
        - 2.0 * np.interp(grid, r, khat) / disc
    )
    if not np.any(np.isfinite(m)):
        raise ValueError("bandwidth criterion is not finite anywhere on the grid")
    return float(grid[np.nanargmin(m)])


# ---------------------------------------------------------------------------
# kernel fields
# ---------------------------------------------------------------------------

class GaussianTemporalField:
    """Gaussian kernel estimate of the temporal factor, renormalized so its
    integral over the observation interval equals the event count."""

    def __init__(self, times, t_range, bw):
        if bw <= 0:
            raise ValueError("bandwidth must be positive")
        self.times = np.asarray(times, dtype=float)
        self.t_range = tuple(t_range)
        self.bw = float(bw)
        t0, t1 = self.t_range
        inside = special.ndtr((t1 - self.times) / bw) - special.ndtr((t0 - self.times) / bw)
        self.mass = float(self.times.size)
        self._scale = self.mass / float(inside.sum())

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        z = (t[..., None] - self.times) / self.bw
        dens = np.exp(-0.5 * z * z).sum(axis=-1) / (self.bw * math.sqrt(2.0 * math.pi))
        return self._scale * dens

    def describe(self):
        return {"variant": "gaussian_kernel", "bw": repr(self.bw),
                "n": str(self.times.size)}


class QuarticSpatialField:
    """Quartic (biweight) kernel estimate of the spatial factor with the
    per-event window-mass correction, so the field integrates to n over the
    window."""

    def __init__(self, sx, sy, window, bw):
        if bw <= 0:
            raise ValueError("bandwidth must be positive")
        self.sx = np.asarray(sx, dtype=float)
        self.sy = np.asarray(sy, dtype=float)
        self.window = window
        self.bw = float(bw)
        self.corrections = _window_masses(self.sx, self.sy, window, self.bw)
        self.mass = float(self.sx.size)

    def evaluate(self, sx, sy):
        sx = np.asarray(sx, dtype=float)
        sy = np.asarray(sy, dtype=float)
        shape = np.broadcast(sx, sy).shape
        px = np.broadcast_to(sx, shape).ravel().astype(float)
        py = np.broadcast_to(sy, shape).ravel().astype(float)
        vals = _accel.quartic_field(px, py, self.sx, self.sy,
                                    1.0 / self.corrections, self.bw)
        return vals.reshape(shape) if shape else float(vals[0])

    def describe(self):
        return {"variant": "quartic_kernel", "bw": repr(self.bw),
                "n": str(self.sx.size)}


def _window_masses(sx, sy, window, h):
    """Kernel mass inside the window for each event: the radial integral of
    the quartic profile times the exact in-window arc fraction, split at the
    radii where the circle starts crossing a side or corner."""
    n = sx.size
    if n == 0:
        return np.zeros(0)
    dl = sx - window.x_range[0]
    dr = window.x_range[1] - sx
    db = sy - window.y_range[0]
    dt = window.y_range[1] - sy
    kinks = np.stack([
        dl, dr, db, dt,
        np.hypot(dl, db), np.hypot(dl, dt), np.hypot(dr, db), np.hypot(dr, dt),
    ], axis=1)
    bounds = np.concatenate(
        [np.zeros((n, 1)), np.sort(np.clip(kinks, 0.0, h), axis=1),
         np.full((n, 1), h)], axis=1,
    )
    x01, w01 = np.polynomial.legendre.leggauss(16)
    a = bounds[:, :-1, None]
    b = bounds[:, 1:, None]
    r = 0.5 * (b - a) * x01 + 0.5 * (a + b)
    frac = circle_arc_fractions(sx[:, None, None], sy[:, None, None], r, window)
    rho2 = (r / h) ** 2
    integrand = (1.0 - rho2) ** 2 * frac * r
    seg = (0.5 * (b - a) * w01 * integrand).sum(axis=(1, 2))
    return 6.0 / (h * h) * seg


def temporal_kernel_intensity(times, t_range, bw=None):
    """Gaussian temporal factor; bandwidth defaults to the rule of thumb."""
    if bw is None:
        bw = silverman_bandwidth(times)
    return GaussianTemporalField(times, t_range, bw)


def spatial_kernel_intensity(pattern, bw):
    return QuarticSpatialField(pattern.sx, pattern.sy, pattern.window, bw)


# ---------------------------------------------------------------------------
# parametric fields
# ---------------------------------------------------------------------------

def _design(sx, sy, order):
    cols = [np.ones_like(sx), sx, sy]
    if order == 2:
        cols += [sx * sx, sx * sy, sy * sy]
    elif order != 1:
        raise ValueError("model order must be 1 or 2")
    return np.stack(cols, axis=1)


@dataclass
class ParametricFit:
    model_order: int
    coefficients: np.ndarray
    temporal_rate: float
    iterations: int
    gradient_norm: float


class LogLinearSpatialField:
    """exp(beta . Z(s)) rescaled so the window integral equals the target
    mass (an intercept shift absorbing the quadrature residual)."""

    def __init__(self, beta, window, order, mass):
        self.beta = np.asarray(beta, dtype=float)
        self.window = window
        self.order = order
        x, wx = _gl_nodes(*window.x_range, 64)
        y, wy = _gl_nodes(*window.y_range, 64)
        gx, gy = np.meshgrid(x, y, indexing="ij")
        vals = self._raw(gx.ravel(), gy.ravel())
        raw_mass = float((wx[:, None] * wy[None, :]).ravel() @ vals)
        self._scale = mass / raw_mass
        self.mass = float(mass)

    def _raw(self, sx, sy):
        return np.exp(_design(np.asarray(sx, dtype=float),
                              np.asarray(sy, dtype=float), self.order) @ self.beta)

    def evaluate(self, sx, sy):
        shape = np.broadcast(sx, sy).shape
        sx = np.broadcast_to(np.asarray(sx, dtype=float), shape).ravel()
        sy = np.broadcast_to(np.asarray(sy, dtype=float), shape).ravel()
        return (self._scale * self._raw(sx, sy)).reshape(shape)

    def describe(self):
        out = {"variant": "loglinear", "order": str(self.order),
               "scale": repr(self._scale)}
        for k, b in enumerate(self.beta):
            out[f"beta{k}"] = repr(float(b))
        return out


class ExpTemporalField:
    """n * exp(gamma t) / integral over the interval."""

    def __init__(self, gamma, t_range, n):
        self.gamma = float(gamma)
        self.t_range = tuple(t_range)
        self.n = int(n)
        t0, t1 = self.t_range
        g = self.gamma
        if abs(g) < 1e-12:
            denom = t1 - t0
        else:
            denom = (math.exp(g * t1) - math.exp(g * t0)) / g
        self._scale = n / denom
        self.mass = float(n)

    def evaluate(self, t):
        return self._scale * np.exp(self.gamma * np.asarray(t, dtype=float))

    def describe(self):
        return {"variant": "exp_temporal", "gamma": repr(self.gamma),
                "n": str(self.n)}


def _bt_quadrature(sx, sy, window, ncell=32):
    """Quadrature scheme: dummy points at the cell centres of an ncell^2
    grid, each point weighted by cell area over the number of data plus
    dummy points sharing its cell."""
    ex = np.linspace(*window.x_range, ncell + 1)
    ey = np.linspace(*window.y_range, ncell + 1)
    cx = 0.5 * (ex[1:] + ex[:-1])
    cy = 0.5 * (ey[1:] + ey[:-1])
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    qx = np.concatenate([sx, gx.ravel()])
    qy = np.concatenate([sy, gy.ravel()])
    z = np.concatenate([np.ones(sx.size), np.zeros(gx.size)])
    ix = np.clip(np.searchsorted(ex, qx, side="right") - 1, 0, ncell - 1)
    iy = np.clip(np.searchsorted(ey, qy, side="right") - 1, 0, ncell - 1)
    cell = ix * ncell + iy
    counts = np.bincount(cell, minlength=ncell * ncell)
    area = (window.lx / ncell) * (window.ly / ncell)
    wq = area / counts[cell]
    return qx, qy, wq, z


def fit_loglinear(pattern, model_order, window=None, tol=1e-8, max_iter=100):
    """Maximum likelihood log-linear spatial intensity via the quadrature
    GLM reduction, by damped Newton iteration.

    Returns (ParametricFit, LogLinearSpatialField); the temporal_rate slot
    is filled by the caller after the temporal fit.
    """
    window = window or pattern.window
    if pattern.n < (3 if model_order == 1 else 6):
        raise ValueError("more events than coefficients are required")
    qx, qy, wq, z = _bt_quadrature(pattern.sx, pattern.sy, window)
    design = _design(qx, qy, model_order)
    beta = np.zeros(design.shape[1])
    beta[0] = math.log(max(pattern.n, 1) / window.spatial_area)

    def loglik(b):
        eta = design @ b
        return float(z @ eta - wq @ np.exp(eta))

    current = loglik(beta)
    grad_norm = np.inf
    for it in range(1, max_iter + 1):
        eta = design @ beta
        mu = np.exp(eta)
        grad = design.T @ (z - wq * mu)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= tol:
            fit = ParametricFit(model_order, beta.copy(), math.nan, it - 1, grad_norm)
            field = LogLinearSpatialField(beta, window, model_order, pattern.n)
            return fit, field
        hess = design.T @ (design * (wq * mu)[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise RuntimeError("singular information matrix: likelihood is "
                               "unbounded or the model is separated") from None
        predicted = 0.5 * float(grad @ step)
        if predicted <= 1e-9 * (1.0 + abs(current)):
            # gain below float resolution of the objective: take the full
            # Newton step, the next gradient evaluation decides convergence
            beta = beta + step
            current = loglik(beta)
            continue
        scale = 1.0
        for _ in range(60):
            trial = loglik(beta + scale * step)
            if np.isfinite(trial) and trial >= current:
                break
            scale *= 0.5
        else:
            raise RuntimeError("likelihood ascent failed: model may be separated")
        beta = beta + scale * step
        current = trial
    raise RuntimeError(
        f"no convergence in {max_iter} iterations "
        f"(gradient norm {grad_norm:.3e}, last beta {beta.tolist()})"
    )


def fit_exp_temporal(times, t_range):
    """One-parameter exponential temporal intensity by maximum likelihood:
    the rate solves the first-moment equation; the scale makes the mass n."""
    times = np.asarray(times, dtype=float)
    t0, t1 = t_range
    target = float(times.mean())

    def moment(g):
        # mean of t under density proportional to exp(g t) on [t0, t1]
        if abs(g) < 1e-9:
            return 0.5 * (t0 + t1)
        ez = math.exp(g * (t1 - t0))
        return t0 + (t1 - t0) * ez / (ez - 1.0) - 1.0 / g

    lo, hi = -200.0, 200.0
    if not moment(lo) < target < moment(hi):
        raise ValueError("temporal sample mean outside the fittable range")
    gamma = optimize.brentq(lambda g: moment(g) - target, lo, hi, xtol=1e-12)
    return ExpTemporalField(gamma, t_range, times.size)


def assemble_product(spatial_field, temporal_field, n, source="estimated"):
    """Separable intensity spatial(s) * temporal(t) / n."""
    return ProductIntensity(spatial_field, temporal_field, n, source)


# ---------------------------------------------------------------------------
# end-to-end strategies
# ---------------------------------------------------------------------------

def kernel_intensity(pattern, bandwidth="auto"):
    """Separable kernel estimate: quartic spatial factor (fixed or
    MSE-selected bandwidth) times Gaussian temporal factor."""
    if bandwidth == "auto":
        h = berman_diggle_bandwidth(pattern)
        tag = f"kernel(auto:{h:.4g})"
    else:
        h = float(bandwidth)
        tag = f"kernel(h={h:g})"
    spatial = spatial_kernel_intensity(pattern, h)
    temporal = temporal_kernel_intensity(pattern.t, pattern.window.t_range)
    return assemble_product(spatial, temporal, pattern.n, source=tag)


def parametric_intensity(pattern, model_order=1):
    """Separable parametric estimate: log-linear spatial model times
    exponential temporal model."""
    fit, spatial = fit_loglinear(pattern, model_order)
    temporal = fit_exp_temporal(pattern.t, pattern.window.t_range)
    fit.temporal_rate = temporal.gamma
    model = assemble_product(
        spatial, temporal, pattern.n, source=f"parametric({model_order})"
    )
    model.fit = fit
    return model


# ---------------------------------------------------------------------------
# model serialization
# ---------------------------------------------------------------------------

def save_intensity(model, path):
    from .patterns import write_meta

    write_meta(path, model.describe())


def load_intensity(path):
    from .geometry import STWindow
    from .intensity import ConstantIntensity, CosTrendIntensity, ExpTrendIntensity
    from .patterns import read_meta

    meta = read_meta(path)
    variant = meta.get("variant")
    if variant == "constant":
        return ConstantIntensity(float(meta["rate"]))
    if variant == "exp_trend":
        return ExpTrendIntensity(float(meta["beta"]), float(meta["n_expected"]))
    if variant == "cos_trend":
        return CosTrendIntensity(float(meta["beta"]), float(meta["n_expected"]))
    raise ValueError(
        f"variant '{variant}' is recorded for provenance only and cannot be "
        "reconstructed without the original pattern"
    )
