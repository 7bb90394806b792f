"""Upper bounds on the ILRMA cost used to derive the source-model updates.

``aux_plus`` is the Jensen + tangent-line majorizer of the NMF part of the
cost; ``aux_pp`` further bounds its two power terms with :func:`lemma1_upper`
using exponent ``1/p``. Both include their additive constants, so

    cost(state) <= aux_plus(state, tilde) <= aux_pp(state, tilde, p)

holds in absolute value, with equality everywhere when ``tilde`` is the
state's own source model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IlrmaState, log_abs_det, stable_sum
from .tensors import SourceModel

LOG_DOMAIN_P = 0.05


def lemma1_upper(z, xi, q1, q2):
    """Right-hand side of ``z**q1 <= (q1/q2) z**q2 xi**(q1-q2) + ((q2-q1)/q2) xi**q1``.

    Valid for ``0 < q1 < q2`` or ``q2 < q1 < 0`` and positive ``z``, ``xi``;
    the bound is tight exactly at ``z == xi``. All arguments broadcast.
    """
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    if not np.all(((0 < q1) & (q1 < q2)) | ((q2 < q1) & (q1 < 0))):
        raise ValueError(f"need 0 < q1 < q2 or q2 < q1 < 0, got q1={q1}, q2={q2}")
    z = np.asarray(z, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if np.any(z <= 0) or np.any(xi <= 0):
        raise ValueError("z and xi must be positive")
    out = (q1 / q2) * z**q2 * xi ** (q1 - q2) + ((q2 - q1) / q2) * xi**q1
    return out[()] if out.ndim == 0 else out


def _pow(x: np.ndarray, e: float) -> np.ndarray:
    # large |e| (small p): go through the log domain, overflow becomes +inf
    with np.errstate(over="ignore"):
        if abs(e) > 1.0 / LOG_DOMAIN_P:
            return np.exp(e * np.log(x))
        return x**e


@dataclass(frozen=True)
class SurrogateState:
    """Auxiliary variables, each shaped (I, J, L, N) except ``beta`` (I, J, N)."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    p: float

    def __post_init__(self):
        check_p(self.p)
        if np.any(self.alpha < 0) or not np.allclose(self.alpha.sum(axis=2), 1.0, rtol=0, atol=1e-12):
            raise ValueError("alpha must be nonnegative and sum to one over the basis axis")
        for name in ("beta", "gamma", "delta"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def at_equality(cls, model: SourceModel, p: float) -> "SurrogateState":
        """Auxiliary variables that make every bound tight at ``model``."""
        tv = _basis_powers(model)
        R = tv.sum(axis=2)
        return cls(alpha=tv / R[:, :, None, :], beta=R, gamma=tv.copy(), delta=tv.copy(), p=p)


def check_p(p: float) -> float:
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    return float(p)


def _basis_powers(model: SourceModel) -> np.ndarray:
    """``t_{il,n} v_{lj,n}`` for every (i, j, l, n)."""
    return model.T[:, None, :, :] * model.V.transpose(1, 0, 2)[None, :, :, :]


def jensen_upper(tv: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """``sum_l alpha^2 / tv`` >= ``1 / sum_l tv``; inputs (I, J, L, N)."""
    return (alpha**2 / tv).sum(axis=2)


def tangent_upper(R: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``(R - beta) / beta + log beta`` >= ``log R``."""
    return (R - beta) / beta + np.log(beta)


def _constant(state: IlrmaState, R_tilde: np.ndarray) -> np.ndarray:
    n_frames = state.X.shape[1]
    return (np.log(R_tilde) - 1.0).reshape(R_tilde.shape[0], -1).sum(axis=1) - (
        2.0 * n_frames * log_abs_det(state.W)
    )


def aux_plus(state: IlrmaState, tilde: SourceModel) -> float:
    """Majorizer ``J+(W, T, V | T~, V~)`` including its constant term."""
    P = state.P
    tv = _basis_powers(state.model)
    tv_t = _basis_powers(tilde)
    R_t = tv_t.sum(axis=2)
    first = P[:, :, None, :] * tv_t**2 / (R_t[:, :, None, :] ** 2 * tv)
    second = tv / R_t[:, :, None, :]
    per_bin = (first + second).reshape(P.shape[0], -1).sum(axis=1) + _constant(state, R_t)
    return stable_sum(per_bin)


def aux_pp(state: IlrmaState, tilde: SourceModel, p: float) -> float:
    """Parametric majorizer ``J_p++(W, T, V | T~, V~)`` including its constant term."""
    p = check_p(p)
    P = state.P
    tv = _basis_powers(state.model)
    tv_t = _basis_powers(tilde)
    R_t = tv_t.sum(axis=2)
    frac = tv_t / R_t[:, :, None, :]
    inv_ratio = _pow(tv_t / tv, 1.0 / p)
    ratio = _pow(tv / tv_t, 1.0 / p)
    first = P[:, :, None, :] * frac / R_t[:, :, None, :] * (p * inv_ratio + (1.0 - p))
    second = frac * (p * ratio + (1.0 - p))
    with np.errstate(invalid="ignore"):
        per_bin = (first + second).reshape(P.shape[0], -1).sum(axis=1) + _constant(state, R_t)
    return stable_sum(per_bin)
