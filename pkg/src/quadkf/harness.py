"""Truth simulation, Monte Carlo campaigns and sample-based oracle estimators."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import ScenarioConfig
from .filters import (
    FILTERS,
    GaussianBelief,
    estimate_means,
    filter_step,
    gain_for,
    measurement_moments,
)

log = logging.getLogger(__name__)


class FilterStepError(RuntimeError):
    def __init__(self, filter_name: str, step: int, cause: Exception):
        super().__init__(f"{filter_name} failed at step {step}: {cause}")
        self.filter_name = filter_name
        self.step = step


def run_seed(master: int, run: int) -> np.random.SeedSequence:
    """Independent stream for run ``run``; unaffected by the total run count."""
    return np.random.SeedSequence(entropy=master, spawn_key=(run,))


@dataclass
class Truth:
    times: np.ndarray         # (K,) measurement epochs, s
    initial: np.ndarray       # (n,) state at t = 0
    states: np.ndarray        # (K, n) true state at each epoch
    measurements: np.ndarray  # (K, m)


@dataclass
class RunTrace:
    truth: Truth
    means: dict = field(default_factory=dict)  # name -> (K, n)
    covs: dict = field(default_factory=dict)   # name -> (K, n, n)

    def errors(self, name: str) -> np.ndarray:
        """``x_hat - x_true`` per epoch, shape (K, n)."""
        return self.means[name] - self.truth.states


def simulate_truth(config: ScenarioConfig, seed) -> Truth:
    rng = np.random.default_rng(seed)
    dyn = config.dynamics()
    meas = config.measurement()
    noise = config.noise_moments()
    mean = np.asarray(config.initial_mean, dtype=float)
    cov = np.asarray(config.initial_cov, dtype=float)
    w, v = np.linalg.eigh(cov)
    x0 = mean + v @ (np.sqrt(np.clip(w, 0, None)) * rng.standard_normal(mean.size))

    k = config.steps
    q = dyn.process_noise
    q_root = None
    if np.any(q):
        wq, vq = np.linalg.eigh(q)
        q_root = vq * np.sqrt(np.clip(wq, 0, None))
    states = np.empty((k, mean.size))
    x = x0
    for i in range(k):
        x = dyn.propagate(x, config.dt)
        if q_root is not None:
            x = x + q_root @ rng.standard_normal(mean.size)
        states[i] = x
    y = np.atleast_2d(meas.observe(states)).reshape(k, -1) + noise.sample(rng, k)
    times = config.dt * np.arange(1, k + 1)
    return Truth(times, x0, states, y)


def run_filters(config: ScenarioConfig, truth: Truth, filters: Optional[Sequence[str]] = None) -> RunTrace:
    dyn = config.dynamics()
    meas = config.measurement()
    noise = config.noise_moments()
    prior = GaussianBelief(config.initial_mean, config.initial_cov)
    trace = RunTrace(truth)
    k, n = truth.states.shape
    for name in filters or config.filters:
        means = np.empty((k, n))
        covs = np.empty((k, n, n))
        belief = prior
        for i in range(k):
            try:
                belief = filter_step(name, belief, dyn, meas, noise, truth.measurements[i], config.dt, config.ut)
            except Exception as exc:  # surfaced with the failing step
                raise FilterStepError(name, i, exc) from exc
            means[i] = belief.mean
            covs[i] = belief.cov
        trace.means[name] = means
        trace.covs[name] = covs
    return trace


# --- Monte Carlo ---------------------------------------------------------------

@dataclass
class McReport:
    """Campaign summary.

    ``est_sigma``/``eff_sigma`` map filter -> group -> (K,) where a group is
    a set of state components ("pos", "vel").  Estimated sigma is
    ``sqrt(sum of covariance diagonal)`` averaged in the mean-square sense over
    runs; effective sigma is the same sum over the ensemble error variance
    (normalized by the run count).
    """

    times: np.ndarray
    filters: list
    groups: dict
    runs: int
    seed: int
    errors: dict      # filter -> (runs, K, n)
    variances: dict   # filter -> (runs, K, n) covariance diagonals
    est_sigma: dict
    eff_sigma: dict
    containment: dict  # filter -> (K, n) fraction of runs with |err| <= 3 sigma
    rmse: dict         # filter -> group -> RMSE over runs and epochs
    truths: Optional[np.ndarray] = None  # (runs, K, n)

    def final_window(self, fraction: float) -> slice:
        k = len(self.times)
        return slice(k - int(round(fraction * k)), k)


def _one_run(args):
    config, i = args
    truth = simulate_truth(config, run_seed(config.seed, i))
    trace = run_filters(config, truth)
    return (truth.states,
            {f: trace.errors(f) for f in config.filters},
            {f: np.diagonal(trace.covs[f], axis1=1, axis2=2).copy() for f in config.filters})


def monte_carlo(config: ScenarioConfig, runs: Optional[int] = None, workers: Optional[int] = None,
                seeds: Optional[Sequence[int]] = None) -> McReport:
    """Run ``runs`` independent simulations and aggregate.

    ``seeds`` overrides the per-run stream index (e.g. ``[0, 0]`` repeats one
    run).  Results are collected by run index before reduction, so they do not
    depend on ``workers``.
    """
    runs = config.runs if runs is None else runs
    workers = config.workers if workers is None else workers
    if runs < 2:
        raise ValueError("monte_carlo needs at least 2 runs")
    idx = list(range(runs)) if seeds is None else list(seeds)
    jobs = [(config, i) for i in idx]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]

    truths = np.stack([r[0] for r in results])
    errors = {f: np.stack([r[1][f] for r in results]) for f in config.filters}
    variances = {f: np.stack([r[2][f] for r in results]) for f in config.filters}
    return summarize(config, truths, errors, variances)


def summarize(config: ScenarioConfig, truths, errors: dict, variances: dict) -> McReport:
    groups = config.component_groups()
    est, eff, contain, rm = {}, {}, {}, {}
    for f, err in errors.items():
        var = np.clip(variances[f], 0.0, None)
        centred = err - err.mean(axis=0)
        ens_var = np.mean(centred**2, axis=0)              # (K, n), 1/N normalization
        est[f] = {g: np.sqrt(np.mean(var[:, :, list(c)].sum(axis=2), axis=0)) for g, c in groups.items()}
        eff[f] = {g: np.sqrt(ens_var[:, list(c)].sum(axis=1)) for g, c in groups.items()}
        contain[f] = np.mean(np.abs(err) <= 3.0 * np.sqrt(var), axis=0)
        rm[f] = {g: float(np.sqrt(np.mean(np.sum(err[:, :, list(c)] ** 2, axis=2)))) for g, c in groups.items()}
    times = config.dt * np.arange(1, config.steps + 1)
    return McReport(times, list(errors), groups, truths.shape[0], config.seed, errors, variances,
                    est, eff, contain, rm, truths)


# --- metrics and scalar-study oracles ---------------------------------------------

def rmse(estimates, truths) -> float:
    """Root mean square error ``sqrt(mean((est - truth)^2))`` over all entries."""
    e = np.asarray(estimates, dtype=float)
    t = np.asarray(truths, dtype=float)
    if e.shape != t.shape:
        raise ValueError(f"shape mismatch {e.shape} vs {t.shape}")
    if e.size == 0:
        raise ValueError("rmse of empty input")
    return float(np.sqrt(np.mean((e - t) ** 2)))


@dataclass(frozen=True)
class PolyFit:
    """``x ~ sum_k coef[k] * (y - center)**k``."""

    degree: int
    coef: np.ndarray
    center: float
    rmse: float

    def __call__(self, y):
        dy = np.asarray(y, dtype=float) - self.center
        return sum(c * dy**k for k, c in enumerate(self.coef))


def sample_polynomial_mmse(x, y, degree: int) -> PolyFit:
    """Least-squares best estimator of ``x`` that is polynomial (degree 1 or 2) in ``y``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    if x.size != y.size or x.size < 10:
        raise ValueError("need at least 10 paired samples")
    center = float(y.mean())
    design = np.vander(y - center, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(design, x, rcond=None)
    if rank < degree + 1:
        raise ValueError("rank-deficient design: measurement samples are (nearly) constant")
    return PolyFit(degree, coef, center, rmse(design @ coef, x))


@dataclass(frozen=True)
class ConditionalMeanCurve:
    y_mid: np.ndarray   # median y per bin
    x_mean: np.ndarray  # mean x per bin
    edges: np.ndarray
    rmse: float


def conditional_mean_curve(x, y, bins: int = 200) -> ConditionalMeanCurve:
    """Binned ``E[x | y]`` over equal-population bins of ``y``.

    The bin count is capped so every bin holds at least 10 samples.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size or x.size < 100:
        raise ValueError("need at least 100 paired samples")
    if bins < 5:
        raise ValueError("need at least 5 bins")
    bins = min(bins, x.size // 10)
    order = np.argsort(y, kind="stable")
    groups = np.array_split(order, bins)
    fitted = np.empty_like(x)
    y_mid = np.empty(bins)
    x_mean = np.empty(bins)
    for b, g in enumerate(groups):
        x_mean[b] = x[g].mean()
        y_mid[b] = np.median(y[g])
        fitted[g] = x_mean[b]
    edges = np.array([y[g[0]] for g in groups] + [y[groups[-1][-1]]])
    return ConditionalMeanCurve(y_mid, x_mean, edges, rmse(fitted, x))


@dataclass
class ScalarStudy:
    x: np.ndarray
    y: np.ndarray
    estimates: dict  # filter -> (N,) posterior means at each sample's y
    gains: dict      # filter -> AugmentedGain
    moments: dict    # filter -> MeasurementSpaceMoments
    rmse: dict       # filter / "lmmse" / "qmmse" / "mmse" -> value
    fits: dict       # "lmmse", "qmmse" -> PolyFit
    curve: ConditionalMeanCurve


def scalar_study(config: ScenarioConfig, samples: Optional[int] = None, bins: int = 200) -> ScalarStudy:
    """One-shot update study: every joint sample (x, y) is its own truth."""
    n_samples = config.samples if samples is None else samples
    rng = np.random.default_rng(run_seed(config.seed, 0))
    meas = config.measurement()
    noise = config.noise_moments()
    prior = GaussianBelief(config.initial_mean, config.initial_cov)
    w, v = np.linalg.eigh(prior.cov)
    x = prior.mean + (rng.standard_normal((n_samples, prior.dim)) * np.sqrt(np.clip(w, 0, None))) @ v.T
    y = np.atleast_2d(meas.observe(x)).reshape(n_samples, -1) + noise.sample(rng, n_samples)

    estimates, gains, mms, errs = {}, {}, {}, {}
    for name in config.filters:
        mm = measurement_moments(name, prior, meas, noise, config.ut)
        gain = gain_for(name, mm)
        est = estimate_means(prior, gain, mm, y, meas)
        estimates[name] = est[:, 0]
        gains[name] = gain
        mms[name] = mm
        errs[name] = rmse(est, x)
    x0, y0 = x[:, 0], y[:, 0]
    fits = {"lmmse": sample_polynomial_mmse(x0, y0, 1), "qmmse": sample_polynomial_mmse(x0, y0, 2)}
    curve = conditional_mean_curve(x0, y0, bins)
    errs.update({k: f.rmse for k, f in fits.items()})
    errs["mmse"] = curve.rmse
    return ScalarStudy(x0, y0, estimates, gains, mms, errs, fits, curve)
