"""Scenario configuration: dataclasses plus a sectioned JSON format.

JSON layout::

    {"scenario":   {"id", "initial_mean", "initial_cov", "dt", "horizon", "samples"},
     "models":     {"mu", "a", "process_noise"},
     "noise":      {"kind": "three_point" | "gaussian", "support", "probs", "cov"},
     "filters":    ["ekf", "ukf", "qekf", "qukf"],
     "ut":         {"alpha", "beta", "kappa"},
     "montecarlo": {"runs", "seed", "workers"},
     "output":     {"dir"}}

Missing keys fall back to the defaults of the named scenario.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .filters import FILTERS, UtParams
from .models import EARTH_MU, CwParams, MeasurementModel, DynamicsModel, angles_measurement, arctan_measurement, \
    cw_dynamics, identity_dynamics
from .moments import NoiseMoments, discrete_noise_moments, gaussian_noise_moments

OUTPUT_ENV = "QUADKF_OUT"

# three-point angle noise (rad) and its probabilities
THREE_POINT_SUPPORT = [1e-3, -3e-3, -9e-3]
THREE_POINT_PROBS = [15 / 18, 2 / 18, 1 / 18]


@dataclass
class NoiseSpec:
    kind: str = "three_point"
    support: list = field(default_factory=lambda: list(THREE_POINT_SUPPORT))
    probs: list = field(default_factory=lambda: list(THREE_POINT_PROBS))
    cov: Optional[list] = None  # gaussian only, m x m

    def build(self, m: int) -> NoiseMoments:
        if self.kind == "gaussian":
            return gaussian_noise_moments(np.atleast_2d(self.cov))
        if self.kind == "three_point":
            return discrete_noise_moments(self.support, self.probs, dim=m)
        raise ValueError(f"unknown noise kind {self.kind!r}")


@dataclass
class ScenarioConfig:
    scenario: str
    initial_mean: list
    initial_cov: list
    dt: float                      # s
    horizon: float                 # s
    samples: int = 100_000         # scalar study only
    mu: float = EARTH_MU           # km^3/s^2
    a: float = 7000.0              # km
    process_noise: Optional[list] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    filters: list = field(default_factory=lambda: list(FILTERS))
    ut: UtParams = field(default_factory=UtParams)
    runs: int = 200
    seed: int = 0
    workers: int = 1
    output_dir: Optional[str] = None

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def dim(self) -> int:
        return len(self.initial_mean)

    def dynamics(self) -> DynamicsModel:
        q = None if self.process_noise is None else np.asarray(self.process_noise, dtype=float)
        if self.scenario == "cw":
            return cw_dynamics(CwParams(self.mu, self.a), q)
        return identity_dynamics(self.dim, q)

    def measurement(self) -> MeasurementModel:
        return angles_measurement() if self.scenario == "cw" else arctan_measurement()

    def noise_moments(self) -> NoiseMoments:
        return self.noise.build(self.measurement().dim_y)

    def component_groups(self) -> dict[str, tuple[int, ...]]:
        if self.scenario == "cw":
            return {"pos": (0, 1, 2), "vel": (3, 4, 5)}
        return {"pos": tuple(range(self.dim))}

    def validate(self) -> list[str]:
        """Itemized precondition violations; empty when the config is usable."""
        errors = []
        if self.scenario not in ("scalar", "cw"):
            errors.append(f"scenario must be 'scalar' or 'cw', got {self.scenario!r}")
        mean = np.asarray(self.initial_mean, dtype=float)
        cov = np.asarray(self.initial_cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            errors.append(f"initial_cov shape {cov.shape} does not match mean length {mean.size}")
        elif not np.allclose(cov, cov.T) or np.linalg.eigvalsh(0.5 * (cov + cov.T)).min() < -1e-12 * max(np.trace(cov), 1e-300):
            errors.append("initial_cov must be symmetric positive semidefinite")
        if self.scenario == "cw" and mean.size != 6:
            errors.append("cw scenario needs a 6-element state (x, y, z, vx, vy, vz)")
        if self.scenario == "scalar" and mean.size != 1:
            errors.append("scalar scenario needs a 1-element state")
        if not self.dt > 0:
            errors.append(f"dt must be positive, got {self.dt}")
        elif not self.horizon > 0 or abs(self.horizon / self.dt - round(self.horizon / self.dt)) > 1e-9:
            errors.append(f"horizon {self.horizon} must be a positive multiple of dt {self.dt}")
        if self.mu <= 0 or self.a <= 0:
            errors.append("mu and a must be positive")
        if self.noise.kind == "three_point":
            w = np.asarray(self.noise.probs, dtype=float)
            v = np.asarray(self.noise.support, dtype=float)
            if v.shape != w.shape:
                errors.append("noise support and probs differ in length")
            else:
                if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                    errors.append(f"noise probs must sum to 1, got {w.sum():.15g}")
                if abs(w @ v) > 1e-12:
                    errors.append(f"noise table violates the zero-mean precondition (mean {w @ v:.3e})")
        elif self.noise.kind == "gaussian":
            if self.noise.cov is None:
                errors.append("gaussian noise needs 'cov'")
        else:
            errors.append(f"unknown noise kind {self.noise.kind!r}")
        bad = [f for f in self.filters if f not in FILTERS]
        if bad or not self.filters:
            errors.append(f"filters must be a non-empty subset of {sorted(FILTERS)}, got {self.filters}")
        if self.runs < 1:
            errors.append("montecarlo runs must be >= 1")
        if self.samples < 10:
            errors.append("samples must be >= 10")
        n = mean.size
        lam = self.ut.lam(n) if n else 0.0
        if n and n + lam <= 0:
            errors.append(f"UT parameters give n + lambda = {n + lam} <= 0")
        return errors

    def to_json_dict(self) -> dict:
        return {
            "scenario": {"id": self.scenario, "initial_mean": list(self.initial_mean),
                         "initial_cov": [list(r) for r in self.initial_cov], "dt": self.dt,
                         "horizon": self.horizon, "samples": self.samples},
            "models": {"mu": self.mu, "a": self.a, "process_noise": self.process_noise},
            "noise": asdict(self.noise),
            "filters": list(self.filters),
            "ut": {"alpha": self.ut.alpha, "beta": self.ut.beta, "kappa": self.ut.kappa},
            "montecarlo": {"runs": self.runs, "seed": self.seed, "workers": self.workers},
            "output": {"dir": self.output_dir},
        }


def reference_cw_config() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="cw",
        initial_mean=[2.0, 10.0, -3.5, 0.01, -0.005, 0.0005],
        initial_cov=np.diag([1e-4] * 3 + [1e-9] * 3).tolist(),
        dt=60.0,
        horizon=3 * 3600.0,
    )


def reference_scalar_config() -> ScenarioConfig:
    # prior variance 0.05; measurement noise standard deviation 0.01
    return ScenarioConfig(
        scenario="scalar",
        initial_mean=[1.0],
        initial_cov=[[0.05]],
        dt=1.0,
        horizon=1.0,
        noise=NoiseSpec(kind="gaussian", cov=[[1e-4]]),
        runs=1,
    )


DEFAULTS = {"cw": reference_cw_config, "scalar": reference_scalar_config}


def config_from_dict(d: dict, scenario: Optional[str] = None) -> ScenarioConfig:
    sc = dict(d.get("scenario", {}))
    sid = sc.get("id", scenario or "cw")
    if sid not in DEFAULTS:
        raise ValueError(f"unknown scenario id {sid!r}")
    cfg = DEFAULTS[sid]()
    models = d.get("models", {})
    noise = d.get("noise")
    ut = d.get("ut", {})
    mc = d.get("montecarlo", {})
    out = d.get("output", {})
    updates = {
        "initial_mean": sc.get("initial_mean", cfg.initial_mean),
        "initial_cov": sc.get("initial_cov", cfg.initial_cov),
        "dt": float(sc.get("dt", cfg.dt)),
        "horizon": float(sc.get("horizon", cfg.horizon)),
        "samples": int(sc.get("samples", cfg.samples)),
        "mu": float(models.get("mu", cfg.mu)),
        "a": float(models.get("a", cfg.a)),
        "process_noise": models.get("process_noise", cfg.process_noise),
        "filters": list(d.get("filters", cfg.filters)),
        "ut": UtParams(float(ut.get("alpha", cfg.ut.alpha)), float(ut.get("beta", cfg.ut.beta)),
                       ut.get("kappa", cfg.ut.kappa)),
        "runs": int(mc.get("runs", cfg.runs)),
        "seed": int(mc.get("seed", cfg.seed)),
        "workers": int(mc.get("workers", cfg.workers)),
        "output_dir": out.get("dir", cfg.output_dir),
    }
    if noise is not None:
        base = asdict(cfg.noise)
        base.update(noise)
        updates["noise"] = NoiseSpec(**base)
    return replace(cfg, **updates)


def load_config(path, scenario: Optional[str] = None) -> ScenarioConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh), scenario)


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))
