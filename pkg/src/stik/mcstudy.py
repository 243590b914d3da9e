"""Monte Carlo comparison machinery: replication-level error surfaces,
integral deviation statistics, relative efficiency across edge corrections,
pointwise envelopes, and detection power.

Replications are embarrassingly parallel with pre-assigned seeds derived
from (master seed, scenario id, replication index); aggregation folds in
replication order, so reports are byte-identical for any worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing

import numpy as np

from .estimators import EdgeCorrection, default_grid, second_order_surfaces
from .geometry import unit_cube
from .intensity_fit import kernel_intensity, parametric_intensity
from .simulate import replication_rng


@dataclass
class ErrorSurfaces:
    """Pointwise bias, mean squared error and absolute relative error over
    replications; cells with any missing input are NaN."""

    bias: np.ndarray
    mse: np.ndarray
    are: np.ndarray
    n_replications: int


@dataclass
class DeviationSample:
    values: np.ndarray
    kind: str  # "d_vs_truth" or "d_vs_mean"
    correction: EdgeCorrection


@dataclass
class EnvelopeField:
    upper: np.ndarray
    n_null: int


def error_surfaces(estimates, truth):
    """Per-cell bias, MSE and ARE of a stack of surfaces against the truth."""
    arr = np.array([getattr(e, "values", e) for e in estimates], dtype=float)
    truth = np.asarray(truth, dtype=float)
    diff = arr - truth
    bias = diff.mean(axis=0)
    mse = (diff * diff).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        are = np.where(truth != 0, np.abs(diff) / truth, np.nan).mean(axis=0)
    return ErrorSurfaces(bias, mse, are, arr.shape[0])


def _trapezoid_weights(x):
    w = np.empty_like(x)
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    return w


def deviation_d(estimate, reference, grid):
    """Trapezoidal integral over the grid rectangle of the squared difference
    between two surfaces; cells missing on either side are excluded together
    with their quadrature weight."""
    est = np.asarray(getattr(estimate, "values", estimate), dtype=float)
    ref = np.asarray(getattr(reference, "values", reference), dtype=float)
    w = _trapezoid_weights(grid.u)[:, None] * _trapezoid_weights(grid.v)[None, :]
    diff2 = (est - ref) ** 2
    defined = np.isfinite(diff2)
    if defined.sum() < 4:
        raise ValueError("fewer than 4 defined grid entries")
    return float(np.sum(w[defined] * diff2[defined]))


def relative_efficiency(samples):
    """100 * min variance / variance across corrections; the most stable
    correction scores exactly 100."""
    variances = {}
    for corr, sample in samples.items():
        values = np.asarray(getattr(sample, "values", sample), dtype=float)
        if values.size < 2:
            raise ValueError("need at least two deviation values per correction")
        variances[corr] = float(values.var())
    vmin = min(variances.values())
    out = {}
    for corr, v in variances.items():
        out[corr] = 100.0 if v == vmin or v == 0.0 else 100.0 * vmin / v
    return out


def envelope(null_surfaces):
    """Pointwise maximum of the no-clustering estimates."""
    arr = np.array([getattr(s, "values", s) for s in null_surfaces], dtype=float)
    return EnvelopeField(arr.max(axis=0), arr.shape[0])


def detection_probability(test_surfaces, env):
    """Fraction of test estimates exceeding the envelope, per cell."""
    arr = np.array([getattr(s, "values", s) for s in test_surfaces], dtype=float)
    exceed = (arr > env.upper).astype(float)
    exceed[~np.isfinite(arr)] = np.nan
    exceed[:, ~np.isfinite(env.upper)] = np.nan
    return exceed.mean(axis=0)


def power_from_deviation(test_sample, null_sample):
    """Fraction of test deviation statistics exceeding the largest
    no-clustering deviation statistic."""
    test = np.asarray(test_sample.values, dtype=float)
    null = np.asarray(null_sample.values, dtype=float)
    if test.size == 0 or null.size == 0:
        raise ValueError("deviation samples must be non-empty")
    return float(np.mean(test > null.max()))


# ---------------------------------------------------------------------------
# study orchestration
# ---------------------------------------------------------------------------

@dataclass
class StudyConfig:
    scenario: object
    corrections: tuple = tuple(EdgeCorrection)
    statistics: tuple = ("K", "g")
    intensity: str = "true"  # true | kernel | parametric
    bandwidth: object = "auto"  # spatial bandwidth for the kernel route
    model_order: int = 1
    n_sim: int = 100
    seed: int = 0
    grid: object = None
    h_s: float = 0.01
    h_t: float = 0.01
    window: object = None
    compute_power: bool = True

    def __post_init__(self):
        if self.n_sim < 1:
            raise ValueError("n_sim must be at least 1")
        self.corrections = tuple(EdgeCorrection(c) for c in self.corrections)
        self.statistics = tuple(self.statistics)
        self.grid = self.grid or default_grid()
        self.window = self.window or unit_cube()


@dataclass
class McReport:
    config: StudyConfig
    mean: dict = field(default_factory=dict)  # (stat, corr) -> surface
    error: dict = field(default_factory=dict)  # (stat, corr) -> ErrorSurfaces
    deviations: dict = field(default_factory=dict)  # (role, stat, corr, kind)
    efficiency: dict = field(default_factory=dict)  # stat -> {corr: pct}
    detection: dict = field(default_factory=dict)  # (stat, corr) -> p(u, v)
    power: dict = field(default_factory=dict)  # (stat, corr) -> float
    excluded_fraction: dict = field(default_factory=dict)  # (stat, corr) -> frac
    mean_count: dict = field(default_factory=dict)  # role -> float


def _fit_intensity(pattern, config):
    if config.intensity == "true":
        return None  # resolved by the caller from the scenario
    if config.intensity == "kernel":
        return kernel_intensity(pattern, config.bandwidth)
    if config.intensity == "parametric":
        return parametric_intensity(pattern, config.model_order)
    raise ValueError(f"unknown intensity strategy '{config.intensity}'")


def _replicate(args):
    config, scenario, role, rep = args
    rng = replication_rng(config.seed, f"{role}:{scenario.tag()}", rep)
    try:
        pattern = scenario.simulate(config.window, rng)
        model = _fit_intensity(pattern, config)
        if model is None:
            model = scenario.true_intensity(config.window)
        surfs = second_order_surfaces(
            pattern, model, config.corrections, config.statistics,
            config.grid, config.h_s, config.h_t,
        )
    except Exception as exc:
        raise RuntimeError(
            f"replication {rep} of {role}:{scenario.tag()} failed "
            f"(master seed {config.seed}): {exc}"
        ) from exc
    return pattern.n, {k: s.values for k, s in surfs.items()}


def _run_cohort(config, scenario, role, workers):
    args = [(config, scenario, role, rep) for rep in range(config.n_sim)]
    if workers and workers > 1:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(_replicate, args,
                                    chunksize=max(1, config.n_sim // (4 * workers))))
    else:
        results = [_replicate(a) for a in args]
    counts = np.array([r[0] for r in results], dtype=float)
    stacks = {
        key: np.array([r[1][key] for r in results])
        for key in results[0][1]
    }
    return counts, stacks


def run_study(config, workers=1):
    """Simulate, estimate and aggregate one scenario (plus its no-clustering
    null when detection power is requested).  Deterministic for a fixed
    config and seed regardless of the worker count."""
    scenario = config.scenario
    grid = config.grid
    report = McReport(config)

    counts, stacks = _run_cohort(config, scenario, "test", workers)
    report.mean_count["test"] = float(counts.mean())

    truth = {"K": scenario.truth_k(grid), "g": scenario.truth_g(grid)}
    d_truth = {}
    for (stat, corr), arr in stacks.items():
        report.mean[(stat, corr)] = arr.mean(axis=0)
        report.excluded_fraction[(stat, corr)] = float(np.isnan(arr).mean())
        if truth[stat] is not None:
            report.error[(stat, corr)] = error_surfaces(arr, truth[stat])
            vals = np.array([deviation_d(a, truth[stat], grid) for a in arr])
            sample = DeviationSample(vals, "d_vs_truth", corr)
            report.deviations[("test", stat, corr, "d_vs_truth")] = sample
            d_truth.setdefault(stat, {})[corr] = sample
        ref = report.mean[(stat, corr)]
        vals = np.array([deviation_d(a, ref, grid) for a in arr])
        report.deviations[("test", stat, corr, "d_vs_mean")] = DeviationSample(
            vals, "d_vs_mean", corr)

    for stat, samples in d_truth.items():
        if len(samples) > 1:
            report.efficiency[stat] = relative_efficiency(samples)

    if config.compute_power:
        null_scenario = scenario.null_scenario()
        null_counts, null_stacks = _run_cohort(config, null_scenario, "null", workers)
        report.mean_count["null"] = float(null_counts.mean())
        for (stat, corr), arr in null_stacks.items():
            # each cohort's deviations are centred at its own replication
            # mean, so the statistic measures excess variability and any
            # estimation bias common to a cohort cancels out
            ref = arr.mean(axis=0)
            vals = np.array([deviation_d(a, ref, grid) for a in arr])
            null_sample = DeviationSample(vals, "d_vs_mean", corr)
            report.deviations[("null", stat, corr, "d_vs_mean")] = null_sample
            test_sample = report.deviations[("test", stat, corr, "d_vs_mean")]
            report.power[(stat, corr)] = power_from_deviation(test_sample, null_sample)
            env = envelope(arr)
            report.detection[(stat, corr)] = detection_probability(
                stacks[(stat, corr)], env)
    return report


# ---------------------------------------------------------------------------
# report directory
# ---------------------------------------------------------------------------

def _fmt(x):
    return "NA" if not np.isfinite(x) else repr(float(x))


def write_report(report, outdir, extra_meta=None):
    """Emit report.csv, deviations.csv, power.csv and meta.txt."""
    import os

    from . import __version__
    from .patterns import write_meta

    os.makedirs(outdir, exist_ok=True)
    config = report.config
    grid = config.grid
    tag = config.scenario.tag()

    with open(os.path.join(outdir, "report.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("scenario,correction,statistic,u,v,value\n")

        def emit(corr, name, table):
            for a, uu in enumerate(grid.u):
                for b, vv in enumerate(grid.v):
                    fh.write(f"{tag},{corr.value},{name},{uu!r},{vv!r},"
                             f"{_fmt(table[a, b])}\n")

        for (stat, corr), table in sorted(
                report.mean.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
            emit(corr, f"{stat}_mean", table)
            if (stat, corr) in report.error:
                err = report.error[(stat, corr)]
                emit(corr, f"{stat}_bias", err.bias)
                emit(corr, f"{stat}_mse", err.mse)
                emit(corr, f"{stat}_are", err.are)
            if (stat, corr) in report.detection:
                emit(corr, f"{stat}_detect", report.detection[(stat, corr)])

    with open(os.path.join(outdir, "deviations.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("role,correction,statistic,kind,replication,value\n")
        for (role, stat, corr, kind), sample in sorted(
                report.deviations.items(),
                key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].value, kv[0][3])):
            for rep, val in enumerate(sample.values):
                fh.write(f"{role},{corr.value},{stat},{kind},{rep},{_fmt(val)}\n")

    with open(os.path.join(outdir, "power.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("correction,statistic,power,relative_efficiency\n")
        keys = sorted(set(report.power) | {
            (stat, corr) for stat in report.efficiency
            for corr in report.efficiency[stat]
        }, key=lambda k: (k[0], k[1].value))
        for stat, corr in keys:
            power = report.power.get((stat, corr), math.nan)
            eff = report.efficiency.get(stat, {}).get(corr, math.nan)
            fh.write(f"{corr.value},{stat},{_fmt(power)},{_fmt(eff)}\n")

    meta = {
        "scenario": tag,
        "corrections": ",".join(c.value for c in config.corrections),
        "statistics": ",".join(config.statistics),
        "intensity": config.intensity,
        "bandwidth": str(config.bandwidth),
        "model_order": str(config.model_order),
        "n_sim": str(config.n_sim),
        "seed": str(config.seed),
        "grid_u": " ".join(repr(float(x)) for x in grid.u),
        "grid_v": " ".join(repr(float(x)) for x in grid.v),
        "h_s": repr(config.h_s),
        "h_t": repr(config.h_t),
        "compute_power": str(config.compute_power),
        "stik_version": __version__,
        "numpy_version": np.__version__,
    }
    for role, cnt in sorted(report.mean_count.items()):
        meta[f"mean_count.{role}"] = repr(cnt)
    for (stat, corr), frac in sorted(
            report.excluded_fraction.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        meta[f"excluded_fraction.{stat}.{corr.value}"] = repr(frac)
    if extra_meta:
        meta.update({k: str(v) for k, v in extra_meta.items()})
    write_meta(os.path.join(outdir, "meta.txt"), meta)
