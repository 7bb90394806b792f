"""Multichannel STFT / inverse STFT with a periodic Hann window.

Signals are ``(samples, channels)`` real arrays; spectrograms are ``(I, J, M)``
complex arrays with ``I = fft_length // 2 + 1``. Both ends are reflect-padded
by ``fft_length // 2`` samples and the tail is zero-padded up to a whole
number of hops, so frame ``j`` is centred on sample ``j * shift``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensors import as_spectrogram

WINDOWS = ("hann",)


def periodic_hann(length: int) -> np.ndarray:
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)


@dataclass(frozen=True)
class StftConfig:
    fft_length: int = 4096
    shift: int = 2048
    window: str = "hann"
    sample_rate: int = 16000

    def __post_init__(self):
        if self.fft_length < 2 or self.fft_length % 2:
            raise ValueError(f"fft_length must be an even integer >= 2, got {self.fft_length}")
        if self.shift < 1 or self.fft_length % self.shift:
            raise ValueError(f"shift ({self.shift}) must divide fft_length ({self.fft_length})")
        if self.window not in WINDOWS:
            raise ValueError(f"unsupported window {self.window!r}; choose from {WINDOWS}")
        if self.sample_rate < 1:
            raise ValueError("sample_rate must be positive")
        # Hann needs at least 50% overlap for constant overlap-add.
        if self.fft_length // self.shift < 2:
            raise ValueError("Hann window requires shift <= fft_length / 2 for constant overlap-add")

    @property
    def n_bins(self) -> int:
        return self.fft_length // 2 + 1

    def analysis_window(self) -> np.ndarray:
        return periodic_hann(self.fft_length)

    def n_frames(self, length: int) -> int:
        """Frame count produced by :func:`stft` for a signal of ``length`` samples."""
        return -(-length // self.shift) + 1

    def frames_to_length(self, n_frames: int) -> int:
        """Longest signal length whose STFT has exactly ``n_frames`` frames."""
        return (n_frames - 1) * self.shift


def _as_signal(signal) -> np.ndarray:
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"signal must be (samples, channels), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains NaN or Inf")
    return x


def stft(signal, cfg: StftConfig) -> np.ndarray:
    """One-sided STFT of a ``(samples, channels)`` signal."""
    x = _as_signal(signal)
    length = x.shape[0]
    if length < cfg.fft_length:
        raise ValueError(
            f"signal has {length} samples, shorter than fft_length={cfg.fft_length}"
        )
    half = cfg.fft_length // 2
    J = cfg.n_frames(length)
    padded = np.pad(x, ((half, half), (0, 0)), mode="reflect")
    tail = (J - 1) * cfg.shift + cfg.fft_length - padded.shape[0]
    if tail > 0:
        padded = np.pad(padded, ((0, tail), (0, 0)))
    starts = np.arange(J) * cfg.shift
    frames = padded[starts[:, None] + np.arange(cfg.fft_length)[None, :], :]  # (J, F, M)
    frames = frames * cfg.analysis_window()[None, :, None]
    spec = np.fft.rfft(frames, axis=1)  # (J, I, M)
    return as_spectrogram(spec.transpose(1, 0, 2))


def window_sumsquare(cfg: StftConfig, n_frames: int) -> np.ndarray:
    """Overlap-added squared analysis window over ``n_frames`` frames."""
    w2 = cfg.analysis_window() ** 2
    out = np.zeros((n_frames - 1) * cfg.shift + cfg.fft_length)
    for j in range(n_frames):
        out[j * cfg.shift : j * cfg.shift + cfg.fft_length] += w2
    return out


def istft(spec, cfg: StftConfig, length: int) -> np.ndarray:
    """Inverse of :func:`stft`; returns a ``(length, channels)`` real signal.

    Frames are synthesised with the analysis window and the overlap-add is
    divided by the summed squared window, i.e. the synthesis window is the
    canonical dual of the analysis window.
    """
    S = np.asarray(spec, dtype=np.complex128)
    if S.ndim != 3:
        raise ValueError(f"spectrogram must be (I, J, M), got shape {S.shape}")
    I, J, M = S.shape
    if I != cfg.n_bins:
        raise ValueError(f"spectrogram has {I} bins, config expects {cfg.n_bins}")
    if length < 1 or cfg.n_frames(length) != J:
        raise ValueError(
            f"length {length} is inconsistent with {J} frames at shift {cfg.shift}"
        )
    frames = np.fft.irfft(S.transpose(1, 0, 2), n=cfg.fft_length, axis=1)  # (J, F, M)
    frames = frames * cfg.analysis_window()[None, :, None]
    out = np.zeros(((J - 1) * cfg.shift + cfg.fft_length, M))
    for j in range(J):
        out[j * cfg.shift : j * cfg.shift + cfg.fft_length] += frames[j]
    envelope = window_sumsquare(cfg, J)
    half = cfg.fft_length // 2
    out = out[half : half + length]
    return out / envelope[half : half + length, None]
