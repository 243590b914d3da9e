"""Named simulation scenarios: process family plus parameters, with the
matching true intensity, closed-form second-order truth where one exists,
and the no-clustering null used by detection studies."""

import math
from dataclasses import dataclass

import numpy as np

from .intensity import ConstantIntensity, CosTrendIntensity, ExpTrendIntensity
from .simulate import (
    ClusterSpec,
    parent_model_for,
    pcp1_g,
    pcp1_k,
    poisson_k,
    simulate_hpp,
    simulate_ipp,
    simulate_pcp,
)

FAMILIES = ("hpp", "ipp", "pcp1", "pcp2", "pcp3")
MODELS = ("lambda1", "lambda2")


@dataclass(frozen=True)
class Scenario:
    """One process configuration.  ``lam`` is the homogeneous rate for hpp
    and the expected total count for ipp; cluster families use nu * mc."""

    family: str
    lam: float = 375.0
    model: str = "lambda1"
    beta: float = 1.0
    sigma: float = 0.1
    alpha: float = 0.2
    nu: float = 25.0
    mc: float = 15.0
    zeta: float = 1.0
    theta: float = math.pi / 4.0
    omega: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown scenario '{self.family}' (valid: {', '.join(FAMILIES)})"
            )
        if self.family in ("ipp", "pcp3") and self.model not in MODELS:
            raise ValueError(
                f"unknown intensity model '{self.model}' (valid: {', '.join(MODELS)})"
            )

    @property
    def expected_count(self):
        if self.family in ("hpp", "ipp"):
            return self.lam
        return self.nu * self.mc

    def tag(self):
        if self.family == "hpp":
            return f"hpp(lam={self.lam:g})"
        if self.family == "ipp":
            return f"ipp({self.model},beta={self.beta:g},n={self.lam:g})"
        base = f"sigma={self.sigma:g},alpha={self.alpha:g},nu={self.nu:g},mc={self.mc:g}"
        if self.family == "pcp1":
            return f"pcp1({base})"
        if self.family == "pcp2":
            return (f"pcp2({base},zeta={self.zeta:g},theta={self.theta:g},"
                    f"omega={self.omega:g})")
        return f"pcp3({self.model},beta={self.beta:g},{base})"

    def _analytic_model(self, n):
        cls = ExpTrendIntensity if self.model == "lambda1" else CosTrendIntensity
        return cls(self.beta, n)

    def simulate(self, window, rng):
        if self.family == "hpp":
            return simulate_hpp(self.lam, window, rng)
        if self.family == "ipp":
            return simulate_ipp(self._analytic_model(self.lam), window, rng)
        if self.family in ("pcp1", "pcp2"):
            spec = ClusterSpec(self.nu, self.sigma, self.alpha, self.mc,
                               zeta=self.zeta if self.family == "pcp2" else 1.0,
                               theta=self.theta if self.family == "pcp2" else 0.0,
                               omega=self.omega if self.family == "pcp2" else 1.0)
            return simulate_pcp(spec, window, rng)
        parent = parent_model_for(self._analytic_model(self.expected_count),
                                  self.nu, window)
        spec = ClusterSpec(parent, self.sigma, self.alpha, self.mc)
        return simulate_pcp(spec, window, rng)

    def true_intensity(self, window=None):
        """Intensity used when the study assumes the intensity known: the
        simulated first-order structure for Poisson families, the nominal
        parent trend scaled to the expected count for cluster families."""
        if self.family == "hpp":
            return ConstantIntensity(self.lam)
        if self.family == "ipp":
            return self._analytic_model(self.lam)
        if self.family in ("pcp1", "pcp2"):
            return ConstantIntensity(self.nu * self.mc)
        return self._analytic_model(self.expected_count)

    def truth_k(self, grid):
        """Closed-form K on the grid, or None."""
        u, v = grid.u[:, None], grid.v[None, :]
        if self.family in ("hpp", "ipp"):
            return poisson_k(u, v)
        if self.family == "pcp1":
            return pcp1_k(u, v, self.sigma, self.alpha, self.nu)
        return None

    def truth_g(self, grid):
        u, v = grid.u[:, None], grid.v[None, :]
        if self.family in ("hpp", "ipp"):
            return np.ones((grid.u.size, grid.v.size))
        if self.family == "pcp1":
            return pcp1_g(u, v, self.sigma, self.alpha, self.nu)
        return None

    def null_scenario(self):
        """Matching no-clustering benchmark: a Poisson process with the same
        first-order structure."""
        if self.family in ("hpp", "ipp"):
            return self
        if self.family in ("pcp1", "pcp2"):
            return Scenario("hpp", lam=self.nu * self.mc)
        return Scenario("ipp", lam=self.expected_count,
                        model=self.model, beta=self.beta)


def scenario_from_params(params):
    """Build a Scenario from a flat string-keyed mapping (config files and
    CLI overrides)."""
    family = str(params.get("scenario", "hpp")).lower()
    kwargs = {}
    for key, conv in (
        ("lam", float), ("model", str), ("beta", float), ("sigma", float),
        ("alpha", float), ("nu", float), ("mc", float), ("zeta", float),
        ("theta", float), ("omega", float),
    ):
        if key in params and params[key] != "":
            kwargs[key] = conv(params[key])
    return Scenario(family, **kwargs)
