"""RIFF WAV reading/writing (16-bit PCM and 32-bit float in, 32-bit float out)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile


def read_wav(path) -> tuple[int, np.ndarray]:
    """Return ``(sample_rate, signal)`` with ``signal`` float64 (samples, channels) in [-1, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such WAV file: {path}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}; use 16-bit PCM or 32-bit float")
    if x.ndim == 1:
        x = x[:, None]
    return int(rate), x


def write_wav(path, sample_rate: int, signal) -> None:
    x = np.asarray(signal, dtype=np.float32)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, int(sample_rate), x)
