"""Third and fourth central moments in matricized form.

Skewness of an ``n``-vector is stored as ``n x n**2`` (``E[dx dx^[2]^T]``)
and kurtosis as ``n**2 x n**2`` (``E[dx^[2] dx^[2]^T]``), raw moments of the
zero-mean deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .tensor_kit import matricize, stack

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _square(p, name: str) -> np.ndarray:
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"{name} must be square, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class StateHighMoments:
    skew: np.ndarray  # n x n^2
    kurt: np.ndarray  # n^2 x n^2

    @property
    def dim(self) -> int:
        return self.skew.shape[0]


@dataclass(frozen=True)
class NoiseMoments:
    """Zero-mean additive noise described up to fourth order.

    ``sampler(rng, size)`` returns an array of shape ``(size, dim)``; it is
    only needed when the noise has to be simulated.
    """

    cov: np.ndarray
    skew: np.ndarray
    kurt: np.ndarray
    sampler: Optional[Sampler] = None

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise ValueError("these noise moments carry no sampler")
        return self.sampler(rng, size)

    @classmethod
    def zero(cls, m: int) -> "NoiseMoments":
        return cls(np.zeros((m, m)), np.zeros((m, m * m)), np.zeros((m * m, m * m)),
                   lambda rng, size: np.zeros((size, m)))


@dataclass(frozen=True)
class MeasurementSpaceMoments:
    """Predicted measurement mean and the augmented covariance blocks.

    When ``noise_included`` is False the ``p_yy*`` blocks are the noise-free
    transforms of the state uncertainty.
    """

    y_hat: np.ndarray   # m
    p_xy: np.ndarray    # n x m
    p_xy2: np.ndarray   # n x m^2
    p_yy: np.ndarray    # m x m
    p_yy2: np.ndarray   # m x m^2
    p_y2y2: np.ndarray  # m^2 x m^2
    noise_included: bool = False

    @property
    def dim(self) -> int:
        return self.p_yy.shape[0]


def isserlis_kurtosis(p) -> np.ndarray:
    """Gaussian fourth moments ``P_ij P_km + P_ik P_jm + P_im P_jk``.

    Row index ``(i, j)`` and column index ``(k, m)`` follow the Kronecker
    ordering ``i * n + j``.
    """
    p = _square(p, "P")
    n = p.shape[0]
    k = (np.einsum("ij,km->ijkm", p, p)
         + np.einsum("ik,jm->ijkm", p, p)
         + np.einsum("im,jk->ijkm", p, p))
    return _sym(k.reshape(n * n, n * n))


def gaussian_closure(p) -> StateHighMoments:
    p = _square(p, "P")
    n = p.shape[0]
    return StateHighMoments(np.zeros((n, n * n)), isserlis_kurtosis(p))


def gaussian_noise_moments(cov) -> NoiseMoments:
    cov = _sym(_square(cov, "noise covariance"))
    m = cov.shape[0]
    w, v = np.linalg.eigh(cov)
    root = v * np.sqrt(np.clip(w, 0.0, None))

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.standard_normal((size, m)) @ root.T

    return NoiseMoments(cov, np.zeros((m, m * m)), isserlis_kurtosis(cov), sampler)


def scalar_central_moments(support, probs, tol: float = 1e-12) -> tuple[float, float, float]:
    """Variance, third and fourth moments of a zero-mean finite distribution."""
    v = np.asarray(support, dtype=float).ravel()
    w = np.asarray(probs, dtype=float).ravel()
    if v.shape != w.shape or v.size == 0:
        raise ValueError("support and probs must be non-empty and the same length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > tol:
        raise ValueError(f"probs must form a distribution (sum={w.sum()!r})")
    mean = float(w @ v)
    if abs(mean) > tol:
        raise ValueError(f"noise support must have zero mean, got mean {mean:.3e}")
    return float(w @ v**2), float(w @ v**3), float(w @ v**4)


def discrete_noise_moments(support, probs, dim: int = 1, tol: float = 1e-12) -> NoiseMoments:
    """Exact moments of finite-support noise with independent axes.

    ``support``/``probs`` are either one list shared by all ``dim`` axes or a
    sequence of per-axis lists.  Cross-axis odd moments vanish and
    ``E[n_i^2 n_j^2] = s_i^2 s_j^2`` for ``i != j``.
    """
    supports, weights = _per_axis(support, probs, dim)
    m = len(supports)
    var, mu3, mu4 = np.array([scalar_central_moments(s, w, tol) for s, w in zip(supports, weights)]).T

    cov = np.diag(var)
    skew = np.zeros((m, m * m))
    kurt = np.zeros((m, m, m, m))
    for i in range(m):
        skew[i, i * m + i] = mu3[i]
        kurt[i, i, i, i] = mu4[i]
        for j in range(m):
            if i != j:
                vv = var[i] * var[j]
                kurt[i, i, j, j] = vv
                kurt[i, j, i, j] = vv
                kurt[i, j, j, i] = vv
    kurt = _sym(kurt.reshape(m * m, m * m))

    values = [np.asarray(s, dtype=float) for s in supports]
    cdfs = [np.cumsum(np.asarray(w, dtype=float)) for w in weights]

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random((size, m))
        out = np.empty((size, m))
        for a in range(m):
            idx = np.searchsorted(cdfs[a], u[:, a], side="right")
            out[:, a] = values[a][np.minimum(idx, values[a].size - 1)]
        return out

    return NoiseMoments(cov, skew, kurt, sampler)


def _per_axis(support, probs, dim):
    if np.isscalar(support[0]):
        return [support] * dim, [probs] * dim
    support, probs = list(support), list(probs)
    if len(support) != len(probs):
        raise ValueError("need one probability list per support list")
    return support, probs


def augment_measurement_noise(clean: MeasurementSpaceMoments, noise: NoiseMoments) -> MeasurementSpaceMoments:
    """Add independent zero-mean measurement noise to noise-free moments.

    The fourth-moment block collects every pairing of signal and noise in
    ``(s + e)^[2] (s + e)^[2]^T``; the two ``matricize`` terms are the
    transposed-pair products ``E[s_i e_j e_k s_l]`` and ``E[e_i s_j s_k e_l]``.
    """
    if clean.noise_included:
        raise ValueError("moments already include measurement noise")
    m = clean.dim
    if noise.dim != m:
        raise ValueError(f"noise dimension {noise.dim} does not match measurement dimension {m}")

    pyy_bar = clean.p_yy
    r = noise.cov
    v_p = stack(pyy_bar)[:, None]
    v_r = stack(r)[:, None]
    p_y2y2 = (clean.p_y2y2 + noise.kurt
              + np.kron(pyy_bar, r) + matricize(np.kron(v_p, r.T), m * m)
              + np.kron(r, pyy_bar) + matricize(np.kron(v_r, pyy_bar.T), m * m)
              + v_p @ v_r.T + v_r @ v_p.T)
    return replace(
        clean,
        p_yy=_sym(pyy_bar + r),
        p_yy2=clean.p_yy2 + noise.skew,
        p_y2y2=_sym(p_y2y2),
        noise_included=True,
    )
