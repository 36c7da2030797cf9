"""Dynamics and measurement models.

Both model kinds accept a single state ``(n,)`` or a batch ``(k, n)`` with one
state per row, and return outputs with the matching leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

EARTH_MU = 398600.4418  # km^3/s^2


class UndefinedGeometryError(ValueError):
    """Raised when a measurement is requested at a singular geometry."""


class DynamicsModel:
    """State propagation ``x' = f(x, dt)`` with additive process noise."""

    dim: int
    process_noise: np.ndarray

    def propagate(self, x, dt: float) -> np.ndarray:
        raise NotImplementedError

    def transition_jacobian(self, x, dt: float) -> np.ndarray:
        raise NotImplementedError


class MeasurementModel:
    """Noise-free observation ``y = h(x)``."""

    dim_x: int
    dim_y: int

    def observe(self, x) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:
        raise NotImplementedError

    def residual(self, y, y_ref) -> np.ndarray:
        """``y - y_ref``; angle sensors override this to wrap."""
        return np.asarray(y, dtype=float) - np.asarray(y_ref, dtype=float)


class FunctionDynamics(DynamicsModel):
    """Dynamics from plain callables ``f(x, dt)`` and ``jac(x, dt)``."""

    def __init__(self, dim: int, f: Callable, jac: Callable, process_noise=None):
        self.dim = dim
        self._f = f
        self._jac = jac
        self.process_noise = (np.zeros((dim, dim)) if process_noise is None
                              else np.atleast_2d(np.asarray(process_noise, dtype=float)))

    def propagate(self, x, dt):
        return np.asarray(self._f(np.asarray(x, dtype=float), dt), dtype=float)

    def transition_jacobian(self, x, dt):
        return np.atleast_2d(np.asarray(self._jac(np.asarray(x, dtype=float), dt), dtype=float))


def identity_dynamics(dim: int, process_noise=None) -> FunctionDynamics:
    return FunctionDynamics(dim, lambda x, dt: x.copy(), lambda x, dt: np.eye(dim), process_noise)


class FunctionMeasurement(MeasurementModel):
    def __init__(self, dim_x: int, dim_y: int, h: Callable, jac: Callable):
        self.dim_x, self.dim_y = dim_x, dim_y
        self._h, self._jac = h, jac

    def observe(self, x):
        return np.asarray(self._h(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x):
        return np.atleast_2d(np.asarray(self._jac(np.asarray(x, dtype=float)), dtype=float))


def linear_measurement(h_matrix) -> FunctionMeasurement:
    h = np.atleast_2d(np.asarray(h_matrix, dtype=float))
    return FunctionMeasurement(h.shape[1], h.shape[0], lambda x: x @ h.T, lambda x: h.copy())


# --- Clohessy-Wiltshire ------------------------------------------------------

@dataclass(frozen=True)
class CwParams:
    mu: float = EARTH_MU  # km^3/s^2
    a: float = 7000.0     # km

    def __post_init__(self):
        if self.mu <= 0 or self.a <= 0:
            raise ValueError("mu and a must be positive")

    @property
    def mean_motion(self) -> float:
        return cw_mean_motion(self.mu, self.a)


def cw_mean_motion(mu: float, a: float) -> float:
    if mu <= 0 or a <= 0:
        raise ValueError("mu and a must be positive")
    return float(np.sqrt(mu / a**3))


def cw_system_matrix(n: float) -> np.ndarray:
    """``A`` in ``d/dt [r, v] = A [r, v]`` for state (x, y, z, vx, vy, vz)."""
    a = np.zeros((6, 6))
    a[:3, 3:] = np.eye(3)
    a[3, 0] = 3 * n * n
    a[3, 4] = 2 * n
    a[4, 3] = -2 * n
    a[5, 2] = -n * n
    return a


def cw_stm(n: float, dt: float) -> np.ndarray:
    """Closed-form CW state transition matrix over ``dt`` seconds."""
    nt = n * dt
    s, c = np.sin(nt), np.cos(nt)
    return np.array([
        [4 - 3 * c, 0, 0, s / n, 2 * (1 - c) / n, 0],
        [6 * (s - nt), 1, 0, 2 * (c - 1) / n, (4 * s - 3 * nt) / n, 0],
        [0, 0, c, 0, 0, s / n],
        [3 * n * s, 0, 0, c, 2 * s, 0],
        [6 * n * (c - 1), 0, 0, -2 * s, 4 * c - 3, 0],
        [0, 0, -n * s, 0, 0, c],
    ])


class CwDynamics(DynamicsModel):
    dim = 6

    def __init__(self, params: CwParams = CwParams(), process_noise=None):
        self.params = params
        self.n = params.mean_motion
        self.process_noise = np.zeros((6, 6)) if process_noise is None else np.asarray(process_noise, dtype=float)
        self._stm_cache: dict[float, np.ndarray] = {}

    def stm(self, dt: float) -> np.ndarray:
        phi = self._stm_cache.get(dt)
        if phi is None:
            phi = self._stm_cache[dt] = cw_stm(self.n, dt)
        return phi

    def propagate(self, x, dt):
        return np.asarray(x, dtype=float) @ self.stm(dt).T

    def transition_jacobian(self, x, dt):
        return self.stm(dt)


def cw_dynamics(params: CwParams = CwParams(), process_noise=None) -> CwDynamics:
    return CwDynamics(params, process_noise)


class AnglesMeasurement(MeasurementModel):
    """Azimuth ``atan2(y, x)`` and elevation ``asin(z / r)`` of a CW state."""

    dim_x = 6
    dim_y = 2

    def observe(self, x):
        x = np.asarray(x, dtype=float)
        px, py, pz = x[..., 0], x[..., 1], x[..., 2]
        rho2 = px * px + py * py
        if np.any(rho2 == 0):
            raise UndefinedGeometryError("azimuth undefined when x = y = 0")
        r = np.sqrt(rho2 + pz * pz)
        return np.stack([np.arctan2(py, px), np.arcsin(pz / r)], axis=-1)

    def jacobian(self, x):
        px, py, pz = np.asarray(x, dtype=float)[:3]
        rho2 = px * px + py * py
        if rho2 == 0:
            raise UndefinedGeometryError("azimuth undefined when x = y = 0")
        rho = np.sqrt(rho2)
        r2 = rho2 + pz * pz
        h = np.zeros((2, 6))
        h[0, 0] = -py / rho2
        h[0, 1] = px / rho2
        h[1, 0] = -px * pz / (r2 * rho)
        h[1, 1] = -py * pz / (r2 * rho)
        h[1, 2] = rho / r2
        return h

    def residual(self, y, y_ref):
        d = np.asarray(y, dtype=float) - np.asarray(y_ref, dtype=float)
        d[..., 0] = -np.remainder(-d[..., 0] + np.pi, 2 * np.pi) + np.pi
        return d


def angles_measurement() -> AnglesMeasurement:
    return AnglesMeasurement()


class ArctanMeasurement(MeasurementModel):
    dim_x = 1
    dim_y = 1

    def observe(self, x):
        return np.arctan(np.asarray(x, dtype=float))

    def jacobian(self, x):
        x0 = float(np.asarray(x, dtype=float).ravel()[0])
        return np.array([[1.0 / (1.0 + x0 * x0)]])


def arctan_measurement() -> ArctanMeasurement:
    return ArctanMeasurement()


def numerical_jacobian(fun: Callable, x, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of ``fun`` at ``x``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * step))
    return np.stack(cols, axis=-1)
