"""ILRMA parameter set and its cost function."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .tensors import SingularDemixingError, bmm, SourceModel, as_demixing, as_spectrogram

LOG_DET_MIN = math.log(1e-300)


@dataclass(frozen=True)
class IlrmaState:
    """Demixing matrices ``W`` (I, N, N), source model and observation ``X`` (I, J, N)."""

    W: np.ndarray
    model: SourceModel
    X: np.ndarray

    def __post_init__(self):
        X = as_spectrogram(self.X)
        I, J, M = X.shape
        W = as_demixing(self.W, n_bins=I)
        if W.shape[1] != M:
            raise ValueError(f"demixing matrices are {W.shape[1]}x{W.shape[2]} but X has {M} channels")
        m = self.model
        if (m.n_bins, m.n_frames, m.n_sources) != (I, J, M):
            raise ValueError(
                f"source model spans (I, J, N)=({m.n_bins}, {m.n_frames}, {m.n_sources}), "
                f"observation is {X.shape}"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W", W)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.X.shape

    def with_(self, **changes) -> "IlrmaState":
        return replace(self, **changes)

    # lazily cached derived arrays; the state itself is immutable
    @cached_property
    def Y(self) -> np.ndarray:
        return demix(self.W, self.X)

    @cached_property
    def P(self) -> np.ndarray:
        """Separated powers ``|w_{i,n}^H x_ij|^2``, (I, J, N)."""
        return power_of(self.Y)

    @cached_property
    def R(self) -> np.ndarray:
        """Model powers ``sum_l t_{il,n} v_{lj,n}``, (I, J, N)."""
        return self.model.power()


def demix(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``y_{ij} = W_i x_{ij}`` for stacked ``W`` (I, N, M) and ``X`` (I, J, M)."""
    return bmm(X, W.transpose(0, 2, 1))


def power_of(Y: np.ndarray) -> np.ndarray:
    return Y.real**2 + Y.imag**2


def separate(state: IlrmaState) -> np.ndarray:
    """Separated spectrogram ``Y`` of shape (I, J, N)."""
    return state.Y.copy()


def log_abs_det(W: np.ndarray) -> np.ndarray:
    """Per-bin ``log|det W_i|`` via pivoted LU; raises on (near-)singular bins."""
    sign, logdet = np.linalg.slogdet(W)
    bad = (sign == 0) | (logdet < LOG_DET_MIN)
    if np.any(bad):
        bins = np.flatnonzero(bad)
        raise SingularDemixingError(
            f"demixing matrix singular (|det| < 1e-300) at bins {bins[:10].tolist()}"
        )
    return logdet


def stable_sum(terms: np.ndarray) -> float:
    """Deterministic sum: pairwise over trailing axes, exactly-rounded over the first."""
    terms = np.asarray(terms, dtype=np.float64)
    partial = terms.reshape(terms.shape[0], -1).sum(axis=1) if terms.ndim > 1 else terms
    if not np.all(np.isfinite(partial)):
        return float(np.sum(partial))
    return math.fsum(partial)


def cost_from(P: np.ndarray, R: np.ndarray, W: np.ndarray) -> float:
    """Cost from separated powers ``P`` and model powers ``R`` (both (I, J, N))."""
    if np.any(R <= 0):
        raise ValueError("model power spectrogram must be strictly positive")
    n_frames = P.shape[1]
    per_bin = (P / R + np.log(R)).reshape(P.shape[0], -1).sum(axis=1)
    per_bin = per_bin - 2.0 * n_frames * log_abs_det(W)
    return stable_sum(per_bin)


def cost(state: IlrmaState) -> float:
    """ILRMA negative log-likelihood (up to constants).

    ``sum_{i,j,n} |w_{i,n}^H x_ij|^2 / r_{ij,n} + log r_{ij,n}  -  2 J sum_i log|det W_i|``
    """
    return cost_from(state.P, state.R, state.W)
