"""Scale restoration and SDR scoring of separated signals."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import IlrmaState, separate
from .stft import StftConfig, istft
from .tensors import SingularDemixingError

SDR_CAP = 300.0


@dataclass(frozen=True)
class EvalReport:
    sdr_before: tuple[float, ...]
    sdr_after: tuple[float, ...]
    permutation: tuple[int, ...]  # permutation[n] = output index matched to reference n
    p: float | None = None
    seed: int | None = None
    iterations: int | None = None

    @property
    def improvement(self) -> tuple[float, ...]:
        return tuple(a - b for a, b in zip(self.sdr_after, self.sdr_before))

    @property
    def mean_improvement(self) -> float:
        return float(np.mean(self.improvement))


def projection_back(state: IlrmaState, reference_channel: int = 0) -> np.ndarray:
    """Separated sources as observed at ``reference_channel``, shape (I, J, N)."""
    Y = separate(state)
    try:
        A = np.linalg.inv(state.W)
    except np.linalg.LinAlgError as exc:
        raise SingularDemixingError("cannot invert demixing matrices for projection back") from exc
    return Y * A[:, reference_channel, :][:, None, :]


def sdr(estimate, reference) -> float:
    """Scale-invariant signal-to-distortion ratio in dB, clipped to +-300 dB."""
    e = np.asarray(estimate, dtype=np.float64).ravel()
    r = np.asarray(reference, dtype=np.float64).ravel()
    if e.shape != r.shape:
        raise ValueError(f"estimate and reference lengths differ: {e.size} vs {r.size}")
    rr = np.dot(r, r)
    if rr == 0:
        raise ValueError("reference signal is all zeros")
    proj = (np.dot(e, r) / rr) * r
    signal = np.dot(proj, proj)
    distortion = np.dot(e - proj, e - proj)
    if signal == 0:
        return -SDR_CAP
    if distortion == 0:
        return SDR_CAP
    return float(np.clip(10.0 * np.log10(signal / distortion), -SDR_CAP, SDR_CAP))


def best_permutation(estimates: np.ndarray, references: np.ndarray):
    """Exhaustive search for the output ordering maximizing total SDR (N <= 3)."""
    N = references.shape[1]
    if N > 3:
        raise ValueError("permutation search is limited to N <= 3 sources")
    scores = np.array(
        [[sdr(estimates[:, k], references[:, n]) for k in range(estimates.shape[1])] for n in range(N)]
    )
    best = max(itertools.permutations(range(N)), key=lambda perm: scores[np.arange(N), perm].sum())
    return best, scores[np.arange(N), best]


def evaluate_run(
    state: IlrmaState,
    references,
    stft_cfg: StftConfig,
    reference_channel: int = 0,
    mixture=None,
    p=None,
    seed=None,
    iterations=None,
) -> EvalReport:
    """Score a separation against ground-truth source images at the reference channel.

    ``references`` is (samples, N). ``mixture`` (samples, M) defaults to the
    inverse STFT of the observation.
    """
    refs = np.asarray(references, dtype=np.float64)
    length = refs.shape[0]
    if mixture is None:
        mixture = istft(state.X, stft_cfg, length)
    mix_ref = np.asarray(mixture)[:, reference_channel]
    before = tuple(sdr(mix_ref, refs[:, n]) for n in range(refs.shape[1]))
    estimates = istft(projection_back(state, reference_channel), stft_cfg, length)
    perm, after = best_permutation(estimates, refs)
    return EvalReport(
        sdr_before=before,
        sdr_after=tuple(float(a) for a in after),
        permutation=tuple(int(k) for k in perm),
        p=p,
        seed=seed,
        iterations=iterations,
    )
