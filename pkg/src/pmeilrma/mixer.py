"""Synthetic determined mixtures following the rank-1 (instantaneous per-bin) model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .stft import StftConfig, istft, stft
from .tensors import FLOOR, as_spectrogram

DEFAULT_MIXING = ((1.0, 0.5), (0.5, 1.0))


@dataclass(frozen=True)
class MixSpec:
    """``mixing`` is either one (M, N) matrix used at every bin or an (I, M, N) stack."""

    n_sources: int = 2
    mixing: object = DEFAULT_MIXING
    source_kind: str = "lowrank"

    def __post_init__(self):
        A = np.asarray(self.mixing, dtype=np.complex128)
        if A.ndim not in (2, 3):
            raise ValueError(f"mixing must be (M, N) or (I, M, N), got shape {A.shape}")
        if A.shape[-2] != A.shape[-1] or A.shape[-1] != self.n_sources:
            raise ValueError(f"mixing must be square with {self.n_sources} sources, got {A.shape}")
        if self.source_kind not in ("lowrank", "wav"):
            raise ValueError(f"unknown source kind {self.source_kind!r}")

    @property
    def frequency_flat(self) -> bool:
        return np.ndim(self.mixing) == 2

    def matrices(self, n_bins: int) -> np.ndarray:
        """Per-bin mixing matrices, shape (I, M, N)."""
        A = np.asarray(self.mixing, dtype=np.complex128)
        if A.ndim == 2:
            return np.broadcast_to(A, (n_bins,) + A.shape).copy()
        if A.shape[0] != n_bins:
            raise ValueError(f"mixing stack has {A.shape[0]} bins, expected {n_bins}")
        return A.copy()


def synth_sources(spec: MixSpec, I: int, J: int, L_true: int, seed: int, T_true=None, V_true=None):
    """Draw low-rank source power spectrograms and circular Gaussian STFT coefficients.

    Returns ``(S, R)`` with ``S`` complex (I, J, N) and ``R = T* V*`` real (I, J, N).
    ``T_true`` (I, L, N) / ``V_true`` (L, J, N) override the random factors.
    """
    if L_true < 1:
        raise ValueError("L_true must be >= 1")
    rng = np.random.default_rng(seed)
    N = spec.n_sources
    # each source owns its own bases; gamma(0.5) gives peaky, well separated spectra
    T = rng.gamma(0.5, 1.0, size=(I, L_true, N)) if T_true is None else np.asarray(T_true, float)
    V = rng.gamma(0.5, 1.0, size=(L_true, J, N)) if V_true is None else np.asarray(V_true, float)
    if T.shape != (I, L_true, N) or V.shape != (L_true, J, N):
        raise ValueError("T_true/V_true shapes do not match (I, L_true, N) / (L_true, J, N)")
    R = np.maximum(np.einsum("iln,ljn->ijn", T, V), FLOOR)
    z = rng.standard_normal((I, J, N)) + 1j * rng.standard_normal((I, J, N))
    S = np.sqrt(R / 2.0) * z
    return as_spectrogram(S), R


def mix(sources, spec: MixSpec, check_recovery: bool = True) -> np.ndarray:
    """``x_ij = A_i s_ij`` for every bin."""
    S = as_spectrogram(sources)
    I, J, N = S.shape
    if N != spec.n_sources:
        raise ValueError(f"got {N} sources, mix spec expects {spec.n_sources}")
    A = spec.matrices(I)
    if check_recovery and np.any(np.linalg.cond(A) > 1e12):
        warnings.warn("mixing matrix is (near-)singular; sources will not be recoverable", stacklevel=2)
    return as_spectrogram(np.einsum("imn,ijn->ijm", A, S))


@dataclass(frozen=True)
class Fixture:
    """A time-domain synthetic mixture with everything needed to score a separation."""

    sources: np.ndarray  # (samples, N) dry source signals
    images: np.ndarray  # (samples, N) source images at the reference microphone
    mixture: np.ndarray  # (samples, M)
    X: np.ndarray  # (I, J, M) STFT of the mixture
    mixing: np.ndarray  # (M, N) real, frequency-flat
    stft_cfg: StftConfig
    reference_channel: int = 0

    @property
    def length(self) -> int:
        return self.mixture.shape[0]


def make_fixture(
    seed: int = 0,
    n_frames: int = 128,
    L_true: int = 2,
    spec: MixSpec | None = None,
    stft_cfg: StftConfig | None = None,
    reference_channel: int = 0,
) -> Fixture:
    """Default desk-scale instance: 2x2 frequency-flat mixing of two low-rank sources.

    Sources are synthesised in the STFT domain, brought to the time domain with
    :func:`istft` and mixed instantaneously, so the mixture STFT obeys
    ``x_ij = A s_ij`` exactly.
    """
    spec = spec or MixSpec()
    cfg = stft_cfg or StftConfig(fft_length=512, shift=256)
    if not spec.frequency_flat:
        raise ValueError("time-domain fixtures need a frequency-flat mixing matrix")
    A = np.asarray(spec.mixing, dtype=np.complex128)
    if np.any(A.imag != 0):
        raise ValueError("time-domain fixtures need a real mixing matrix")
    A = A.real
    length = cfg.frames_to_length(n_frames)
    S, _ = synth_sources(spec, cfg.n_bins, n_frames, L_true, seed)
    s = istft(S, cfg, length)
    s = s / np.sqrt(np.mean(s**2, axis=0, keepdims=True))
    x = s @ A.T
    images = s * A[reference_channel][None, :]
    return Fixture(
        sources=s,
        images=images,
        mixture=x,
        X=stft(x, cfg),
        mixing=A,
        stft_cfg=cfg,
        reference_channel=reference_channel,
    )


FIXTURES = {"default": make_fixture}


def load_fixture(name: str, seed: int, stft_cfg: StftConfig | None = None) -> Fixture:
    """Resolve ``synthetic:<name>``."""
    if name not in FIXTURES:
        raise ValueError(f"unknown synthetic fixture {name!r}; available: {sorted(FIXTURES)}")
    return FIXTURES[name](seed=seed, stft_cfg=stft_cfg)
