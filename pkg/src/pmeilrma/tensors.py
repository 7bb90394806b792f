"""Numeric containers and index conventions.

Every array follows the (frequency, frame, channel/source) order:

* spectrograms ``X``, ``Y``: complex, shape ``(I, J, M)``
* demixing matrices ``W``: complex, shape ``(I, N, M)``; row ``n`` of ``W[i]`` is ``w_{i,n}^H``
* NMF bases ``T``: real, shape ``(I, L, N)``
* NMF activations ``V``: real, shape ``(L, J, N)``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FLOOR = 1e-12


class SingularDemixingError(ValueError):
    """A demixing matrix is (numerically) singular."""


class DegenerateSourceError(ValueError):
    """A separated source carries no energy."""


def as_spectrogram(data) -> np.ndarray:
    """Validate and return a read-only complex128 ``(I, J, M)`` array."""
    if (
        isinstance(data, np.ndarray)
        and data.dtype == np.complex128
        and data.ndim == 3
        and not data.flags.writeable
    ):
        # already validated by a previous call
        return data
    X = np.array(data, dtype=np.complex128)
    if X.ndim != 3 or min(X.shape) < 1:
        raise ValueError(f"spectrogram must have shape (I, J, M) with positive sizes, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("spectrogram contains NaN or Inf")
    X.setflags(write=False)
    return X


def as_demixing(W, n_bins: int | None = None) -> np.ndarray:
    """Validate a stack of square demixing matrices of shape ``(I, N, N)``."""
    W = np.array(W, dtype=np.complex128)
    if W.ndim != 3 or W.shape[1] != W.shape[2]:
        raise ValueError(f"demixing set must have shape (I, N, N), got {W.shape}")
    if n_bins is not None and W.shape[0] != n_bins:
        raise ValueError(f"demixing set has {W.shape[0]} bins, expected {n_bins}")
    if not np.all(np.isfinite(W)):
        raise ValueError("demixing set contains NaN or Inf")
    return W


def nonnegative(data, floor: float = FLOOR) -> np.ndarray:
    """Return a float64 copy of ``data`` clipped from below at ``floor``."""
    a = np.array(data, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("nonnegative matrix contains NaN or Inf")
    return np.maximum(a, floor)


@dataclass(frozen=True)
class SourceModel:
    """NMF source model: bases ``T`` (I, L, N) and activations ``V`` (L, J, N)."""

    T: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=np.float64)
        V = np.asarray(self.V, dtype=np.float64)
        if T.ndim != 3 or V.ndim != 3:
            raise ValueError("T must be (I, L, N) and V must be (L, J, N)")
        if T.shape[1] != V.shape[0] or T.shape[2] != V.shape[2]:
            raise ValueError(f"incompatible source model shapes T{T.shape} and V{V.shape}")
        if not (np.all(np.isfinite(T)) and np.all(np.isfinite(V))):
            raise ValueError("source model contains NaN or Inf")
        if np.any(T <= 0) or np.any(V <= 0):
            raise ValueError("source model entries must be strictly positive")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "V", V)

    @property
    def n_bins(self) -> int:
        return self.T.shape[0]

    @property
    def n_bases(self) -> int:
        return self.T.shape[1]

    @property
    def n_frames(self) -> int:
        return self.V.shape[1]

    @property
    def n_sources(self) -> int:
        return self.T.shape[2]

    def power(self) -> np.ndarray:
        """All estimated power spectrograms at once, shape ``(I, J, N)``."""
        return nmf_product(self.T, self.V)


def bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched matmul; contiguous operands let numpy dispatch to BLAS."""
    return np.matmul(np.ascontiguousarray(a), np.ascontiguousarray(b))


def nmf_product(T: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``sum_l T[i, l, n] V[l, j, n]`` as an (I, J, N) array."""
    return bmm(T.transpose(2, 0, 1), V.transpose(2, 0, 1)).transpose(1, 2, 0)


def estimated_power(model: SourceModel, n: int) -> np.ndarray:
    """Power spectrogram ``r_{ij,n} = sum_l t_{il,n} v_{lj,n}`` of source ``n``, shape ``(I, J)``."""
    if not 0 <= n < model.n_sources:
        raise IndexError(f"source index {n} out of range for {model.n_sources} sources")
    return model.T[:, :, n] @ model.V[:, :, n]
