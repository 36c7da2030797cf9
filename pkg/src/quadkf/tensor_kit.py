"""Kronecker algebra used by the quadratic update.

Conventions
-----------
* ``stack`` is column-major, so ``stack(a @ b.T) == kron(b, a)`` and
  ``E[dy (x) dy] == stack(P_yy)``.
* Index pair ``(i, j)`` of a Kronecker square ``v (x) v`` lives at position
  ``i * m + j``.
* Unique pairs are ordered ``(0,0), (0,1), ..., (0,m-1), (1,1), ..., (m-1,m-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    return a


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {v.shape}")
    return v


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices, ``(p*r) x (q*s)``."""
    return np.kron(_as_matrix(a, "a"), _as_matrix(b, "b"))


def vec_square(v) -> np.ndarray:
    """Kronecker square ``v (x) v`` of a vector."""
    v = _as_vector(v, "v")
    if v.size == 0:
        raise ValueError("vec_square needs a non-empty vector")
    return np.outer(v, v).ravel()


def stack(m) -> np.ndarray:
    """Column-major vectorization (columns concatenated top to bottom)."""
    return _as_matrix(m, "m").ravel(order="F")


def unstack(w, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`stack`."""
    w = _as_vector(w, "w")
    if w.size != rows * cols:
        raise ValueError(f"cannot unstack {w.size} entries into {rows}x{cols}")
    return w.reshape((rows, cols), order="F")


def matricize(w, rows: int) -> np.ndarray:
    """Column-major reshape of any array into a matrix with ``rows`` rows."""
    w = np.asarray(w, dtype=float).ravel(order="F")
    if rows <= 0 or w.size % rows:
        raise ValueError(f"cannot matricize {w.size} entries into {rows} rows")
    return w.reshape((rows, w.size // rows), order="F")


@dataclass(frozen=True)
class ReductionMaps:
    """Maps between full Kronecker-square and unique-pair coordinates.

    Attributes
    ----------
    dim : int
        Measurement dimension ``m``.
    select : ndarray, shape (m(m+1)/2, m**2)
        Picks the unique entries out of a Kronecker square.
    duplicate : ndarray, shape (m**2, m(m+1)/2)
        Rebuilds the full square from its unique entries.
    pairs : tuple of (int, int)
        Ordered index pairs ``i <= j``.
    """

    dim: int
    select: np.ndarray
    duplicate: np.ndarray
    pairs: tuple

    @property
    def reduced_size(self) -> int:
        return len(self.pairs)

    @property
    def augmented_select(self) -> np.ndarray:
        """``blkdiag(I_m, select)``: full augmented to reduced augmented."""
        m = self.dim
        out = np.zeros((m + self.reduced_size, m + m * m))
        out[:m, :m] = np.eye(m)
        out[m:, m:] = self.select
        return out


@lru_cache(maxsize=None)
def _reduction_maps(m: int) -> ReductionMaps:
    pairs = tuple((i, j) for i in range(m) for j in range(i, m))
    select = np.zeros((len(pairs), m * m))
    duplicate = np.zeros((m * m, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        select[k, i * m + j] = 1.0
        duplicate[i * m + j, k] = 1.0
        duplicate[j * m + i, k] = 1.0
    select.setflags(write=False)
    duplicate.setflags(write=False)
    return ReductionMaps(m, select, duplicate, pairs)


def reduction_maps(m: int) -> ReductionMaps:
    if int(m) != m or m < 1:
        raise ValueError(f"dimension must be a positive integer, got {m}")
    return _reduction_maps(int(m))


def commutation_matrix(p: int, q: int) -> np.ndarray:
    """``K`` with ``K @ stack(A) == stack(A.T)`` for ``A`` of shape (p, q)."""
    k = np.zeros((p * q, p * q))
    for i in range(p):
        for j in range(q):
            k[i * q + j, j * p + i] = 1.0
    return k
