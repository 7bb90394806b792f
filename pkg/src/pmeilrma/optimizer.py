"""ILRMA with parametric majorization-equalization source-model updates.

Each iteration updates the NMF bases, then the activations (using the fresh
bases), then every demixing row by iterative projection, then rescales each
source to unit average power. Every step leaves the cost nonincreasing for
any ``p`` in (0, 1]; ``p = 0.5`` gives the classic square-root multiplicative
updates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import IlrmaState, cost
from .surrogate import check_p
from .tensors import FLOOR, DegenerateSourceError, SingularDemixingError, SourceModel, as_spectrogram, bmm

logger = logging.getLogger(__name__)

REGULARIZATION = 1e-12
# eigenvalue ratio below which a weighted covariance counts as singular
SINGULAR_RATIO = 4 * np.finfo(np.float64).eps
STEPS = ("T", "V", "W", "normalize")


@dataclass(frozen=True)
class OptimizerConfig:
    p: float = 0.5
    n_bases: int = 10
    iterations: int = 200
    normalize: bool = True
    record_cost: bool = True
    record_steps: bool = False
    seed: int = 0

    def __post_init__(self):
        check_p(self.p)
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.n_bases < 1:
            raise ValueError("n_bases must be >= 1")


@dataclass
class RunResult:
    state: IlrmaState
    cost_trace: list[float] = field(default_factory=list)
    # (iteration, step name, cost after the step); empty unless record_steps
    step_costs: list[tuple[int, str, float]] = field(default_factory=list)
    config: OptimizerConfig | None = None
    meta: object = None


def ratio_terms_t(P: np.ndarray, R: np.ndarray, V: np.ndarray):
    """Numerator and denominator sums of the basis update, each (I, L, N)."""
    Vn = V.transpose(2, 1, 0)  # (N, J, L)
    num = bmm((P / R**2).transpose(2, 0, 1), Vn).transpose(1, 2, 0)
    den = bmm((1.0 / R).transpose(2, 0, 1), Vn).transpose(1, 2, 0)
    return num, den


def ratio_terms_v(P: np.ndarray, R: np.ndarray, T: np.ndarray):
    """Numerator and denominator sums of the activation update, each (L, J, N)."""
    Tn = T.transpose(2, 1, 0)  # (N, L, I)
    num = bmm(Tn, (P / R**2).transpose(2, 0, 1)).transpose(1, 2, 0)
    den = bmm(Tn, (1.0 / R).transpose(2, 0, 1)).transpose(1, 2, 0)
    return num, den


def update_t(state: IlrmaState, p: float) -> SourceModel:
    """``t <- t~ (A / B)**p`` with ``A = sum_j |y|^2 v~ / r~^2`` and ``B = sum_j v~ / r~``."""
    p = check_p(p)
    P, R = state.P, state.R
    num, den = ratio_terms_t(P, R, state.model.V)
    T = np.maximum(state.model.T * (num / den) ** p, FLOOR)
    return SourceModel(T, state.model.V)


def update_v(state: IlrmaState, p: float) -> SourceModel:
    """Activation counterpart of :func:`update_t` with sums over frequency."""
    p = check_p(p)
    P, R = state.P, state.R
    num, den = ratio_terms_v(P, R, state.model.T)
    V = np.maximum(state.model.V * (num / den) ** p, FLOOR)
    return SourceModel(state.model.T, V)


def outer_products(X: np.ndarray):
    """Real and imaginary parts of ``x_ij x_ij^H``, each (I, M*M, J)."""
    I, J, M = X.shape
    XX = (X[:, :, :, None] * X.conj()[:, :, None, :]).reshape(I, J, M * M).transpose(0, 2, 1)
    return np.ascontiguousarray(XX.real), np.ascontiguousarray(XX.imag)


def weighted_covariances(X: np.ndarray, R: np.ndarray, outer=None) -> np.ndarray:
    """``U_{i,n} = (1/J) sum_j x_ij x_ij^H / r_{ij,n}``, shape (I, N, M, M).

    ``outer`` is the cached result of :func:`outer_products` for ``X``.
    """
    I, J, M = X.shape
    re, im = outer_products(X) if outer is None else outer
    inv_r = 1.0 / R
    U = bmm(re, inv_r) + 1j * bmm(im, inv_r)  # (I, M*M, N)
    return U.transpose(0, 2, 1).reshape(I, R.shape[2], M, M) / J


def _solve_rows(W: np.ndarray, U: np.ndarray, n: int):
    """Solve ``W_i U_i w = e_n`` for every bin.

    Bins whose ``U_i`` is numerically singular (eigenvalue ratio at machine
    precision) get ``REGULARIZATION * trace(U_i) / M * I`` added first.
    Returns the solutions and the covariances actually used.
    """
    I, M, _ = W.shape
    ev = np.linalg.eigvalsh(U)
    singular = ev[:, 0] <= SINGULAR_RATIO * M * ev[:, -1]
    if np.any(singular):
        bins = np.flatnonzero(singular)
        logger.warning("regularizing singular weighted covariance at bins %s, source %d", bins[:10].tolist(), n)
        scale = np.trace(U[bins], axis1=1, axis2=2).real / M
        if np.any(scale <= 0):
            raise SingularDemixingError(f"zero weighted covariance at bins {bins[scale <= 0][:10].tolist()}")
        U = U.copy()
        U[bins] += REGULARIZATION * scale[:, None, None] * np.eye(M)
    e = np.zeros((I, M, 1), dtype=np.complex128)
    e[:, n] = 1.0
    try:
        w = np.linalg.solve(W @ U, e)[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise SingularDemixingError(f"W U singular while updating source {n}") from exc
    return w, U


def update_w(state: IlrmaState, outer=None) -> np.ndarray:
    """Iterative projection: replace each row of every ``W_i`` in turn."""
    X = state.X
    N = X.shape[2]
    if state.W.shape[1] != N:
        raise ValueError("iterative projection needs as many sources as channels")
    U = weighted_covariances(X, state.R, outer)
    W = state.W.copy()
    for n in range(N):
        w, Un = _solve_rows(W, U[:, n], n)
        quad = np.einsum("im,imk,ik->i", w.conj(), Un, w).real
        if np.any(quad <= 0):
            raise SingularDemixingError(f"nonpositive weighted norm while updating source {n}")
        W[:, n, :] = (w / np.sqrt(quad)[:, None]).conj()
    return W


def normalize(state: IlrmaState) -> IlrmaState:
    """Scale each source to unit mean power, compensating in its bases.

    The cost is exactly invariant under ``w_n -> w_n / lam_n``,
    ``T_n -> T_n / lam_n**2``.
    """
    lam = np.sqrt(state.P.mean(axis=(0, 1)))
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        bad = np.flatnonzero(~(lam > 0)).tolist()
        raise DegenerateSourceError(f"separated source(s) {bad} have zero power")
    W = state.W / lam[None, :, None]
    # no flooring here: it would break the exact invariance of the cost
    T = state.model.T / lam[None, None, :] ** 2
    return state.with_(W=W, model=SourceModel(T, state.model.V))


def init_state(X: np.ndarray, n_bases: int, rng: np.random.Generator) -> IlrmaState:
    """Identity demixing and uniform-random NMF factors in [FLOOR, 1)."""
    X = as_spectrogram(X)
    I, J, N = X.shape
    T = rng.uniform(FLOOR, 1.0, size=(I, n_bases, N))
    V = rng.uniform(FLOOR, 1.0, size=(n_bases, J, N))
    W = np.tile(np.eye(N, dtype=np.complex128), (I, 1, 1))
    return IlrmaState(W=W, model=SourceModel(T, V), X=X)


def iterate(state: IlrmaState, p: float, do_normalize: bool = True, outer=None):
    """One sweep; yields ``(step_name, state)`` after each step."""
    state = state.with_(model=update_t(state, p))
    yield "T", state
    state = state.with_(model=update_v(state, p))
    yield "V", state
    state = state.with_(W=update_w(state, outer))
    yield "W", state
    if do_normalize:
        state = normalize(state)
        yield "normalize", state


def run(X, cfg: OptimizerConfig, stft_meta=None, init: IlrmaState | None = None) -> RunResult:
    """Run ILRMA on an (I, J, N) mixture spectrogram."""
    X = as_spectrogram(X)
    if init is None:
        state = init_state(X, cfg.n_bases, np.random.default_rng(cfg.seed))
    else:
        state = init
    result = RunResult(state=state, config=cfg, meta=stft_meta)
    outer = outer_products(X)
    if cfg.record_cost or cfg.record_steps:
        result.cost_trace.append(cost(state))
    for it in range(1, cfg.iterations + 1):
        for step, state in iterate(state, cfg.p, cfg.normalize, outer):
            if cfg.record_steps:
                result.step_costs.append((it, step, cost(state)))
        if cfg.record_cost:
            if cfg.record_steps:
                result.cost_trace.append(result.step_costs[-1][2])
            else:
                result.cost_trace.append(cost(state))
    result.state = state
    return result


__all__ = [
    "OptimizerConfig",
    "RunResult",
    "init_state",
    "iterate",
    "normalize",
    "run",
    "update_t",
    "update_v",
    "update_w",
    "outer_products",
    "weighted_covariances",
]
