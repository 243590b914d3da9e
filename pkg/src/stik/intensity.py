"""First-order intensity models.

Every model exposes ``evaluate(sx, sy, t)`` (vectorized, events per unit
space-time volume), ``integral(window)``, ``grid_max(window)`` for rejection
bounds, a ``source`` tag identifying where the intensity came from, and
``describe()`` for the key-value serialization format.
"""

import math

import numpy as np
from scipy import integrate


class IntensityModel:
    """Base class: generic quadrature fallbacks for integral and sup."""

    source = "true"

    def evaluate(self, sx, sy, t):
        raise NotImplementedError

    def at_points(self, pattern):
        return self.evaluate(pattern.sx, pattern.sy, pattern.t)

    def integral(self, window, nodes=64):
        x, wx = _gl_nodes(*window.x_range, nodes)
        y, wy = _gl_nodes(*window.y_range, nodes)
        t, wt = _gl_nodes(*window.t_range, nodes)
        vals = self.evaluate(
            x[:, None, None], y[None, :, None], t[None, None, :]
        )
        return float(np.einsum("i,j,k,ijk->", wx, wy, wt, vals))

    def grid_max(self, window, nodes=64):
        """Sup over a regular grid including the window corners."""
        x = np.linspace(*window.x_range, nodes)
        y = np.linspace(*window.y_range, nodes)
        t = np.linspace(*window.t_range, nodes)
        vals = self.evaluate(x[:, None, None], y[None, :, None], t[None, None, :])
        return float(vals.max())

    def describe(self):
        raise NotImplementedError


def _gl_nodes(lo, hi, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


class ConstantIntensity(IntensityModel):
    def __init__(self, rate):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = float(rate)

    def evaluate(self, sx, sy, t):
        return np.broadcast_to(self.rate, np.broadcast(sx, sy, t).shape).copy()

    def integral(self, window, nodes=None):
        return self.rate * window.volume

    def grid_max(self, window, nodes=None):
        return self.rate

    def describe(self):
        return {"variant": "constant", "rate": repr(self.rate)}


class ExpTrendIntensity(IntensityModel):
    """exp(beta * (sx + sy - t)) scaled to integrate to n_expected over the
    window it is bound to (the unit cube by default)."""

    def __init__(self, beta, n_expected, window=None):
        if beta <= 0:
            raise ValueError("beta must be positive")
        from .geometry import unit_cube

        self.beta = float(beta)
        self.n_expected = float(n_expected)
        self.window = window or unit_cube()
        b = self.beta
        ix = (math.exp(b * self.window.x_range[1]) - math.exp(b * self.window.x_range[0])) / b
        iy = (math.exp(b * self.window.y_range[1]) - math.exp(b * self.window.y_range[0])) / b
        it = (math.exp(-b * self.window.t_range[0]) - math.exp(-b * self.window.t_range[1])) / b
        self.norm = self.n_expected / (ix * iy * it)

    def evaluate(self, sx, sy, t):
        return self.norm * np.exp(self.beta * (np.asarray(sx) + np.asarray(sy) - np.asarray(t)))

    def describe(self):
        return {
            "variant": "exp_trend",
            "beta": repr(self.beta),
            "n_expected": repr(self.n_expected),
        }


class CosTrendIntensity(IntensityModel):
    """(1.25 + cos(beta*sx + 0.25)) * (1.25 + cos(beta*t + 0.25)), constant in
    sy, normalized numerically so the integral over the bound window equals
    n_expected."""

    def __init__(self, beta, n_expected, window=None):
        if beta <= 0:
            raise ValueError("beta must be positive")
        from .geometry import unit_cube

        self.beta = float(beta)
        self.n_expected = float(n_expected)
        self.window = window or unit_cube()

        def factor(z):
            return 1.25 + np.cos(self.beta * z + 0.25)

        ix, _ = integrate.quad(factor, *self.window.x_range)
        it, _ = integrate.quad(factor, *self.window.t_range)
        self.norm = self.n_expected / (ix * self.window.ly * it)

    def evaluate(self, sx, sy, t):
        fx = 1.25 + np.cos(self.beta * np.asarray(sx) + 0.25)
        ft = 1.25 + np.cos(self.beta * np.asarray(t) + 0.25)
        return self.norm * fx * np.broadcast_to(1.0, np.shape(sy)) * ft

    def describe(self):
        return {
            "variant": "cos_trend",
            "beta": repr(self.beta),
            "n_expected": repr(self.n_expected),
        }


class ProductIntensity(IntensityModel):
    """Separable estimate spatial(s) * temporal(t) / n, so that the space-time
    integral equals n when each factor integrates to n on its own domain."""

    def __init__(self, spatial, temporal, n, source):
        if n <= 0:
            raise ValueError("n must be positive")
        self.spatial = spatial
        self.temporal = temporal
        self.n = float(n)
        self.source = source

    def evaluate(self, sx, sy, t):
        return self.spatial.evaluate(sx, sy) * self.temporal.evaluate(t) / self.n

    def integral(self, window, nodes=None):
        return self.spatial.mass * self.temporal.mass / self.n

    def describe(self):
        out = {"variant": "product", "n": repr(self.n), "source": self.source}
        for prefix, part in (("spatial", self.spatial), ("temporal", self.temporal)):
            for key, value in part.describe().items():
                out[f"{prefix}.{key}"] = value
        return out
