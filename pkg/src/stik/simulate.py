"""Point-process simulators: homogeneous and inhomogeneous Poisson processes
and Poisson cluster processes (Gaussian spatial dispersal, one-sided
exponential temporal dispersal, optional geometric anisotropy), plus the
closed-form second-order benchmarks used as oracles.

Every simulator is a pure function of (parameters, window, seed).
"""

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .geometry import STWindow
from .intensity import IntensityModel
from .patterns import PointPattern

# truncation controls for cluster-parent buffers: spatial margin in offspring
# standard deviations, temporal margin as a survival quantile of the
# exponential dispersal (both keep truncation bias below 0.1%)
SPATIAL_BUFFER_SDS = 4.0
TEMPORAL_BUFFER_MASS = 1e-3


def as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replication_rng(master_seed, scenario, rep):
    """Independent, reproducible stream for one replication of one scenario."""
    tag = zlib.crc32(str(scenario).encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(tag, int(rep)))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ClusterSpec:
    """Poisson cluster process: parents (rate or intensity model), Gaussian
    offspring displacements with covariance (sigma*omega)^2 *
    U_theta diag(1, zeta^2) U_theta', forward-exponential time offsets with
    rate alpha, Poisson(mc) offspring per parent."""

    parent: object  # float rate, or IntensityModel for inhomogeneous parents
    sigma: float
    alpha: float
    mc: float
    zeta: float = 1.0
    theta: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0 or self.alpha <= 0 or self.mc <= 0:
            raise ValueError("sigma, alpha and mc must be positive")
        if not 0 < self.zeta <= 1:
            raise ValueError("zeta must be in (0, 1]")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    def dispersal_matrix(self):
        """A with A A' equal to the offspring spatial covariance."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        u = np.array([[c, -s], [s, c]])
        return self.sigma * self.omega * u @ np.diag([1.0, self.zeta])


def simulate_hpp(rate, window, seed):
    """Homogeneous Poisson process on the window."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    rng = as_rng(seed)
    n = rng.poisson(rate * window.volume)
    return PointPattern(_uniform_points(rng, n, window), window)


def _uniform_points(rng, n, window):
    sx = rng.uniform(*window.x_range, n)
    sy = rng.uniform(*window.y_range, n)
    t = rng.uniform(*window.t_range, n)
    return np.column_stack([sx, sy, t])


def _rejection_points(rng, model, n, window, bound):
    """n i.i.d. points with density proportional to the model, by rejection
    from the uniform; hard error if the bound is ever exceeded."""
    out = np.empty((0, 3))
    while out.shape[0] < n:
        m = max(128, 2 * (n - out.shape[0]))
        cand = _uniform_points(rng, m, window)
        lam = np.asarray(model.evaluate(cand[:, 0], cand[:, 1], cand[:, 2]), dtype=float)
        if np.any(lam > bound):
            raise RuntimeError(
                "rejection bound violated: intensity exceeds the grid-based "
                "envelope; refine the bound grid"
            )
        accept = rng.uniform(0.0, 1.0, m) * bound < lam
        out = np.vstack([out, cand[accept]])
    return out[:n]


def simulate_ipp(model, window, seed, bound_nodes=64, bound_factor=1.2):
    """Inhomogeneous Poisson process with the given intensity model.

    The count is Poisson with mean equal to the integral of the model; given
    the count, locations are an i.i.d. sample with density proportional to
    the model, realized by rejection sampling with bound ``bound_factor``
    times the model's maximum over a ``bound_nodes``^3 grid.
    """
    rng = as_rng(seed)
    mean = model.integral(window)
    if not np.isfinite(mean) or mean <= 0:
        raise ValueError("model must integrate to a positive finite mean")
    bound = bound_factor * model.grid_max(window, bound_nodes)
    n = rng.poisson(mean)
    return PointPattern(_rejection_points(rng, model, n, window, bound), window)


class _ScaledModel(IntensityModel):
    def __init__(self, base, scale):
        self.base = base
        self.scale = scale

    def evaluate(self, sx, sy, t):
        return self.scale * self.base.evaluate(sx, sy, t)


class _BufferedParentIntensity(IntensityModel):
    """Parent intensity on the buffered simulation window: the base model is
    held constant in time below the observation start (its analytic
    continuation backwards can blow up), and evaluated as-is elsewhere."""

    def __init__(self, base, scale, t_floor):
        self.base = base
        self.scale = scale
        self.t_floor = t_floor

    def evaluate(self, sx, sy, t):
        t = np.maximum(np.asarray(t, dtype=float), self.t_floor)
        return self.scale * self.base.evaluate(sx, sy, t)


def parent_model_for(model, nu, window):
    """Rescale an intensity model so it integrates to nu over the window,
    with constant backward-in-time continuation for buffered simulation."""
    scale = nu / model.integral(window)
    return _BufferedParentIntensity(model, scale, window.t_range[0])


def _retention_probability(sx, sy, t, window, sd_x, sd_y, alpha):
    """Probability that a parent at (sx, sy, t) places one offspring inside
    the window, for axis-aligned Gaussian spatial dispersal and forward
    exponential temporal dispersal."""
    from scipy.special import ndtr

    px = ndtr((window.x_range[1] - sx) / sd_x) - ndtr((window.x_range[0] - sx) / sd_x)
    py = ndtr((window.y_range[1] - sy) / sd_y) - ndtr((window.y_range[0] - sy) / sd_y)
    lag = np.maximum(window.t_range[0] - t, 0.0)
    pt = np.exp(-alpha * lag) - np.exp(-alpha * (window.t_range[1] - t))
    return px * py * np.maximum(pt, 0.0)


def _calibrate_parent_scale(spec, parent, window, buffered, nodes=48):
    """Scale factor on the parent intensity making the expected retained
    offspring count equal mc times the parent integral over the window."""
    from .intensity import _gl_nodes

    disp = spec.dispersal_matrix()
    if abs(disp[0, 1]) > 1e-15 or abs(disp[1, 0]) > 1e-15:
        return 1.0  # rotated dispersal: fall back to the uncalibrated model
    x, wx = _gl_nodes(*buffered.x_range, nodes)
    y, wy = _gl_nodes(*buffered.y_range, nodes)
    t, wt = _gl_nodes(*buffered.t_range, nodes)
    lam = parent.evaluate(x[:, None, None], y[None, :, None], t[None, None, :])
    ret = _retention_probability(
        x[:, None, None], y[None, :, None], t[None, None, :],
        window, disp[0, 0], disp[1, 1], spec.alpha,
    )
    expected = float(np.einsum("i,j,k,ijk->", wx, wy, wt, lam * ret))
    target = parent.integral(window)
    return target / expected


def simulate_pcp(spec, window, seed):
    """Poisson cluster process: only the offspring inside the window are
    returned.  Parents are drawn on a buffered window (spatial dilation of
    4 effective standard deviations, temporal extension downward by the
    0.1% survival quantile of the dispersal) so edge clusters contribute."""
    rng = as_rng(seed)
    pad = SPATIAL_BUFFER_SDS * spec.sigma * max(1.0, spec.omega)
    tpad = -math.log(TEMPORAL_BUFFER_MASS) / spec.alpha
    buffered = STWindow(
        (window.x_range[0] - pad, window.x_range[1] + pad),
        (window.y_range[0] - pad, window.y_range[1] + pad),
        (window.t_range[0] - tpad, window.t_range[1]),
    )

    if isinstance(spec.parent, (int, float)):
        n_par = rng.poisson(spec.parent * buffered.volume)
        parents = _uniform_points(rng, n_par, buffered)
    else:
        # rescale so the expected retained count stays mc * (parent mass on
        # the window), undoing what the buffer construction adds or loses
        scale = _calibrate_parent_scale(spec, spec.parent, window, buffered)
        mean = scale * spec.parent.integral(buffered)
        bound = 1.2 * scale * spec.parent.grid_max(buffered)
        n_par = rng.poisson(mean)
        parents = _rejection_points(
            rng, _ScaledModel(spec.parent, scale), n_par, buffered, bound)

    counts = rng.poisson(spec.mc, size=parents.shape[0])
    total = int(counts.sum())
    disp = spec.dispersal_matrix()
    offsets = rng.standard_normal((total, 2)) @ disp.T
    dt = rng.exponential(scale=1.0 / spec.alpha, size=total)

    centers = np.repeat(parents, counts, axis=0)
    pts = np.column_stack([
        centers[:, 0] + offsets[:, 0],
        centers[:, 1] + offsets[:, 1],
        centers[:, 2] + dt,
    ])
    keep = window.contains(pts[:, 0], pts[:, 1], pts[:, 2])
    return PointPattern(pts[keep], window)


# ---------------------------------------------------------------------------
# closed-form second-order benchmarks
# ---------------------------------------------------------------------------

def poisson_k(u, v):
    """Space-time K of any Poisson process: 2 pi u^2 v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return 2.0 * np.pi * u * u * v


def pcp1_g(u, v, sigma, alpha, nu):
    """Pair correlation of the isotropic stationary cluster process."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    amp = alpha / (8.0 * np.pi * sigma**2 * nu)
    return 1.0 + amp * np.exp(-(u * u) / (4.0 * sigma**2) - alpha * v)


def pcp1_k(u, v, sigma, alpha, nu):
    """Space-time K of the isotropic stationary cluster process."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    extra = (1.0 - np.exp(-alpha * v)) * (1.0 - np.exp(-(u * u) / (4.0 * sigma**2)))
    return poisson_k(u, v) + extra / (2.0 * nu)
