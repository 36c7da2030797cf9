"""EKF, UKF and their quadratic-update counterparts QEKF and QUKF.

All four estimators share the same measurement update.  A moment provider
(linearized or unscented) produces :class:`MeasurementSpaceMoments`; the
update then either solves the augmented system over ``[dy; dy^[2]]`` or,
for the linear filters, only its first block.

The augmented system is solved in reduced coordinates: for ``m >= 2`` the
Kronecker square ``dy (x) dy`` repeats every off-diagonal product, so the
full augmented covariance is singular.  Duplicate coordinates are dropped
with :func:`~quadkf.tensor_kit.reduction_maps` before solving.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .moments import (
    MeasurementSpaceMoments,
    NoiseMoments,
    StateHighMoments,
    augment_measurement_noise,
    gaussian_closure,
)
from .models import DynamicsModel, MeasurementModel
from .tensor_kit import ReductionMaps, reduction_maps, stack

PIVOT_RTOL = 1e-12
JITTER_RTOL = 1e-12
JITTER_ATTEMPTS = 3


class CovarianceNotPSDError(ValueError):
    pass


class DegenerateMomentsError(ValueError):
    pass


def _sym(m):
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"mean {mean.shape} and covariance {cov.shape} do not agree")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class UtParams:
    """Unscented-transform constants; ``kappa=None`` means ``3 - n``."""

    alpha: float = 1.0
    beta: float = 2.0
    kappa: Optional[float] = None

    def kappa_for(self, n: int) -> float:
        return 3.0 - n if self.kappa is None else float(self.kappa)

    def lam(self, n: int) -> float:
        return self.alpha**2 * (n + self.kappa_for(n)) - n


@dataclass(frozen=True)
class SigmaSet:
    points: np.ndarray  # (2n+1, n), one point per row
    wm: np.ndarray
    wc: np.ndarray


def jittered_cholesky(p: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying with diagonal jitter ``1e-12 tr(P)`` x10."""
    p = _sym(np.asarray(p, dtype=float))
    jitter = JITTER_RTOL * max(np.trace(p), np.finfo(float).tiny)
    eye = np.eye(p.shape[0])
    for attempt in range(JITTER_ATTEMPTS + 1):
        try:
            return np.linalg.cholesky(p if attempt == 0 else p + jitter * 10 ** (attempt - 1) * eye)
        except np.linalg.LinAlgError:
            pass
    if not np.any(p):
        return np.zeros_like(p)
    raise CovarianceNotPSDError("covariance is not positive semidefinite")


def sigma_points(belief: GaussianBelief, params: UtParams = UtParams()) -> SigmaSet:
    n = belief.dim
    lam = params.lam(n)
    if n + lam <= 0:
        raise CovarianceNotPSDError(f"n + lambda = {n + lam} must be positive")
    root = jittered_cholesky((n + lam) * belief.cov)
    x = belief.mean
    points = np.vstack([x, x + root.T, x - root.T])
    wm = np.full(2 * n + 1, 0.5 / (n + lam))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1.0 - params.alpha**2 + params.beta
    return SigmaSet(points, wm, wc)


def sigma_point_moments(belief: GaussianBelief, params: UtParams = UtParams()) -> StateHighMoments:
    """Skewness and kurtosis implied by the sigma set (covariance weights).

    Plugged into the linearized provider, this makes QEKF and QUKF coincide
    for linear sensors.
    """
    sig = sigma_points(belief, params)
    d = sig.points - belief.mean
    n = belief.dim
    d2 = np.einsum("ki,kj->kij", d, d).reshape(-1, n * n)
    wd = sig.wc[:, None] * d
    return StateHighMoments(wd.T @ d2, _sym((sig.wc[:, None] * d2).T @ d2))


# --- prediction ----------------------------------------------------------------

def ekf_predict(belief: GaussianBelief, dynamics: DynamicsModel, dt: float) -> GaussianBelief:
    f = dynamics.transition_jacobian(belief.mean, dt)
    mean = dynamics.propagate(belief.mean, dt)
    return GaussianBelief(mean, _sym(f @ belief.cov @ f.T + dynamics.process_noise))


def ukf_predict(belief: GaussianBelief, dynamics: DynamicsModel, dt: float,
                params: UtParams = UtParams()) -> GaussianBelief:
    sig = sigma_points(belief, params)
    chi = np.atleast_2d(dynamics.propagate(sig.points, dt)).reshape(sig.points.shape)
    mean = sig.wm @ chi
    d = chi - mean
    cov = (sig.wc[:, None] * d).T @ d + dynamics.process_noise
    return GaussianBelief(mean, _sym(cov))


# --- measurement-space moments -------------------------------------------------

def linearized_measurement_moments(
    belief: GaussianBelief,
    model: MeasurementModel,
    noise: NoiseMoments,
    state_moments: Optional[StateHighMoments] = None,
) -> MeasurementSpaceMoments:
    """Moments of ``y = H x + noise`` with ``H`` taken at the prior mean.

    ``state_moments`` defaults to the Gaussian closure of the prior covariance.
    """
    if state_moments is None:
        state_moments = gaussian_closure(belief.cov)
    h = model.jacobian(belief.mean)
    if h.shape[1] != belief.dim or state_moments.dim != belief.dim:
        raise ValueError("state, Jacobian and high-moment dimensions disagree")
    h2 = np.kron(h, h)
    p = belief.cov
    skew_h2 = state_moments.skew @ h2.T
    clean = MeasurementSpaceMoments(
        y_hat=np.atleast_1d(model.observe(belief.mean)),
        p_xy=p @ h.T,
        p_xy2=skew_h2,
        p_yy=_sym(h @ p @ h.T),
        p_yy2=h @ skew_h2,
        p_y2y2=_sym(h2 @ state_moments.kurt @ h2.T),
    )
    return augment_measurement_noise(clean, noise)


def unscented_measurement_moments(
    belief: GaussianBelief,
    model: MeasurementModel,
    noise: NoiseMoments,
    params: UtParams = UtParams(),
) -> MeasurementSpaceMoments:
    sig = sigma_points(belief, params)
    ys = np.atleast_2d(model.observe(sig.points)).reshape(len(sig.wm), -1)
    y_hat = sig.wm @ ys
    dx = sig.points - belief.mean
    dy = model.residual(ys, y_hat)
    m = dy.shape[1]
    dy2 = np.einsum("ki,kj->kij", dy, dy).reshape(-1, m * m)
    wdx = sig.wc[:, None] * dx
    wdy = sig.wc[:, None] * dy
    clean = MeasurementSpaceMoments(
        y_hat=y_hat,
        p_xy=wdx.T @ dy,
        p_xy2=wdx.T @ dy2,
        p_yy=_sym(wdy.T @ dy),
        p_yy2=wdy.T @ dy2,
        p_y2y2=_sym((sig.wc[:, None] * dy2).T @ dy2),
    )
    return augment_measurement_noise(clean, noise)


# --- gain and update -----------------------------------------------------------

@dataclass(frozen=True)
class AugmentedGain:
    """Gain over reduced augmented coordinates ``[dy; L dy^[2]]``.

    ``matrix`` is ``n x (m + m(m+1)/2)``; its trailing block is zero for a
    linear (EKF/UKF) gain.  ``p_aug`` is the reduced augmented measurement
    covariance the gain was solved against.
    """

    matrix: np.ndarray
    p_aug: np.ndarray
    maps: ReductionMaps
    quadratic: bool
    rank: int
    min_pivot: float

    @property
    def linear_part(self) -> np.ndarray:
        return self.matrix[:, : self.maps.dim]

    @property
    def quadratic_part(self) -> np.ndarray:
        """Gain on the unique products ``dy_i dy_j`` (i <= j)."""
        return self.matrix[:, self.maps.dim:]


def augmented_covariances(mm: MeasurementSpaceMoments):
    """Full ``(P_xY, P_YY)`` over ``[dy; dy^[2] - v(P_yy)]``."""
    m = mm.dim
    v = stack(mm.p_yy)
    p_xY = np.hstack([mm.p_xy, mm.p_xy2])
    p_YY = np.block([[mm.p_yy, mm.p_yy2],
                     [mm.p_yy2.T, mm.p_y2y2 - np.outer(v, v)]])
    return p_xY, _sym(p_YY)


def _solve_symmetric(p: np.ndarray, rhs: np.ndarray):
    """Solve ``K p = rhs``; returns ``(K, rank, smallest pivot)``."""
    scale = max(np.trace(np.abs(p)), 0.0)
    if scale == 0.0:
        raise DegenerateMomentsError("augmented measurement covariance is identically zero")
    cutoff = PIVOT_RTOL * scale
    try:
        c, low = scipy.linalg.cho_factor(p, lower=True, check_finite=False)
        pivot = float(np.min(np.diag(c)) ** 2)
        if pivot > cutoff:
            k = scipy.linalg.cho_solve((c, low), rhs.T, check_finite=False).T
            return k, p.shape[0], pivot
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(p)
    keep = np.abs(w) > cutoff
    if not np.any(keep):
        raise DegenerateMomentsError("augmented measurement covariance is numerically zero")
    pinv = (v[:, keep] / w[keep]) @ v[:, keep].T
    return rhs @ pinv, int(keep.sum()), float(np.min(np.abs(w)))


def quadratic_gain(mm: MeasurementSpaceMoments) -> AugmentedGain:
    if not mm.noise_included:
        raise ValueError("gain requires noise-inclusive moments")
    maps = reduction_maps(mm.dim)
    t = maps.augmented_select
    p_xY, p_YY = augmented_covariances(mm)
    p_red = _sym(t @ p_YY @ t.T)
    k, rank, pivot = _solve_symmetric(p_red, p_xY @ t.T)
    return AugmentedGain(k, p_red, maps, True, rank, pivot)


def linear_gain(mm: MeasurementSpaceMoments) -> AugmentedGain:
    """Kalman gain ``P_xy P_yy^-1`` padded with a zero quadratic block."""
    if not mm.noise_included:
        raise ValueError("gain requires noise-inclusive moments")
    maps = reduction_maps(mm.dim)
    m = mm.dim
    b, rank, pivot = _solve_symmetric(mm.p_yy, mm.p_xy)
    k = np.zeros((mm.p_xy.shape[0], m + maps.reduced_size))
    k[:, :m] = b
    p_aug = np.zeros((k.shape[1], k.shape[1]))
    p_aug[:m, :m] = mm.p_yy
    return AugmentedGain(k, p_aug, maps, False, rank, pivot)


def augmented_residual(mm: MeasurementSpaceMoments, dy, maps: Optional[ReductionMaps] = None) -> np.ndarray:
    """``[dy; L (dy (x) dy - v(P_yy))]`` for one residual ``(m,)`` or a batch ``(N, m)``."""
    maps = maps or reduction_maps(mm.dim)
    dy = np.asarray(dy, dtype=float)
    i, j = np.array(maps.pairs).T
    centred = dy[..., i] * dy[..., j] - mm.p_yy[i, j]
    return np.concatenate([dy, centred], axis=-1)


def quadratic_update(belief: GaussianBelief, gain: AugmentedGain, mm: MeasurementSpaceMoments,
                     y_obs, model: Optional[MeasurementModel] = None) -> GaussianBelief:
    y_obs = np.atleast_1d(np.asarray(y_obs, dtype=float))
    if y_obs.shape != (mm.dim,):
        raise ValueError(f"observation has shape {y_obs.shape}, expected ({mm.dim},)")
    dy = model.residual(y_obs, mm.y_hat) if model is not None else y_obs - mm.y_hat
    z = augmented_residual(mm, dy, gain.maps)
    k = gain.matrix
    mean = belief.mean + k @ z
    cov = _sym(belief.cov - k @ gain.p_aug @ k.T)
    return GaussianBelief(mean, cov)


def estimate_means(belief: GaussianBelief, gain: AugmentedGain, mm: MeasurementSpaceMoments,
                   y_obs, model: Optional[MeasurementModel] = None) -> np.ndarray:
    """Posterior means for a batch of observations ``(N, m)`` -> ``(N, n)``."""
    y_obs = np.asarray(y_obs, dtype=float).reshape(-1, mm.dim)
    dy = model.residual(y_obs, mm.y_hat) if model is not None else y_obs - mm.y_hat
    return belief.mean + augmented_residual(mm, dy, gain.maps) @ gain.matrix.T


# --- full steps ----------------------------------------------------------------

@dataclass(frozen=True)
class FilterKind:
    name: str
    unscented: bool
    quadratic: bool


FILTERS = {
    "ekf": FilterKind("ekf", unscented=False, quadratic=False),
    "ukf": FilterKind("ukf", unscented=True, quadratic=False),
    "qekf": FilterKind("qekf", unscented=False, quadratic=True),
    "qukf": FilterKind("qukf", unscented=True, quadratic=True),
}

StateMomentProvider = Callable[[GaussianBelief], StateHighMoments]


def predict(kind: str, belief: GaussianBelief, dynamics: Optional[DynamicsModel], dt: float,
            params: UtParams = UtParams()) -> GaussianBelief:
    if dynamics is None:
        return belief
    if FILTERS[kind].unscented:
        return ukf_predict(belief, dynamics, dt, params)
    return ekf_predict(belief, dynamics, dt)


def measurement_moments(kind: str, belief: GaussianBelief, model: MeasurementModel, noise: NoiseMoments,
                        params: UtParams = UtParams(),
                        state_moments: Optional[StateMomentProvider] = None) -> MeasurementSpaceMoments:
    if FILTERS[kind].unscented:
        return unscented_measurement_moments(belief, model, noise, params)
    high = state_moments(belief) if state_moments is not None else None
    return linearized_measurement_moments(belief, model, noise, high)


def gain_for(kind: str, mm: MeasurementSpaceMoments) -> AugmentedGain:
    return quadratic_gain(mm) if FILTERS[kind].quadratic else linear_gain(mm)


def filter_step(kind: str, belief: GaussianBelief, dynamics: Optional[DynamicsModel], model: MeasurementModel,
                noise: NoiseMoments, y_obs, dt: float, params: UtParams = UtParams(),
                state_moments: Optional[StateMomentProvider] = None) -> GaussianBelief:
    """Predict over ``dt`` (skipped when ``dynamics`` is None) and update with ``y_obs``."""
    if kind not in FILTERS:
        raise ValueError(f"unknown filter {kind!r}; choose from {sorted(FILTERS)}")
    prior = predict(kind, belief, dynamics, dt, params)
    mm = measurement_moments(kind, prior, model, noise, params, state_moments)
    return quadratic_update(prior, gain_for(kind, mm), mm, y_obs, model)


def ekf_step(belief, dynamics, model, noise, y_obs, dt, params=UtParams()):
    return filter_step("ekf", belief, dynamics, model, noise, y_obs, dt, params)


def ukf_step(belief, dynamics, model, noise, y_obs, dt, params=UtParams()):
    return filter_step("ukf", belief, dynamics, model, noise, y_obs, dt, params)


def qekf_step(belief, dynamics, model, noise, y_obs, dt, params=UtParams(), state_moments=None):
    return filter_step("qekf", belief, dynamics, model, noise, y_obs, dt, params, state_moments)


def qukf_step(belief, dynamics, model, noise, y_obs, dt, params=UtParams()):
    return filter_step("qukf", belief, dynamics, model, noise, y_obs, dt, params)
