"""Seeded multi-trial experiments, CSV results and p-binned summaries.

Per-trial seeds are derived from the master seed as
``seed_k = SeedSequence([master, k]).generate_state(1)[0]``. Trial ``k``
initializes NMF from ``default_rng(seed_k)`` and, when ``p`` is random,
draws ``p = 1 - default_rng([seed_k, 1]).random()`` so that ``p`` lies in (0, 1].
"""

from __future__ import annotations

import csv
import io
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .evaluation import evaluate_run, projection_back
from .mixer import Fixture, load_fixture
from .optimizer import OptimizerConfig, run
from .stft import StftConfig, istft, stft
from .surrogate import check_p
from .wavio import read_wav, write_wav

logger = logging.getLogger(__name__)

RESULTS_SCHEMA = "# pmeilrma-results v1"
SUMMARY_SCHEMA = "# pmeilrma-summary v1"
TRACE_HEADER = ("iteration", "cost")
DEFAULT_BASES = (10, 20, 40, 60)
P_BINS = ((0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0))
SYNTHETIC_STFT = StftConfig(fft_length=512, shift=256)
MONOTONE_RTOL = 1e-10


@dataclass(frozen=True)
class RunConfig:
    input: str = "synthetic:default"
    p: float | str = 0.5  # a value in (0, 1] or "random"
    L: tuple[int, ...] = DEFAULT_BASES
    iterations: int = 200
    trials: int = 1
    seed: int = 0
    stft: StftConfig | None = None  # None: 512/256 for synthetic input, 4096/2048 for WAV
    output_dir: str = "results"
    write_wavs: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.p != "random":
            try:
                p = float(self.p)
            except (TypeError, ValueError):
                raise ValueError(f"p must be a number in (0, 1] or 'random', got {self.p!r}") from None
            check_p(p)
            object.__setattr__(self, "p", p)
        L = (self.L,) if isinstance(self.L, int) else tuple(int(v) for v in self.L)
        if not L or min(L) < 1:
            raise ValueError("L must contain positive basis counts")
        object.__setattr__(self, "L", L)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def synthetic(self) -> bool:
        return self.input.startswith("synthetic")

    def stft_config(self) -> StftConfig:
        if self.stft is not None:
            return self.stft
        return SYNTHETIC_STFT if self.synthetic else StftConfig()


def trial_seed(master: int, k: int) -> int:
    return int(np.random.SeedSequence([master, k]).generate_state(1)[0])


def trial_p(cfg: RunConfig, seed_k: int) -> float:
    if cfg.p == "random":
        return 1.0 - float(np.random.default_rng([seed_k, 1]).random())
    return float(cfg.p)


@dataclass
class Dataset:
    X: np.ndarray
    mixture: np.ndarray
    stft_cfg: StftConfig
    references: np.ndarray | None = None  # (samples, N) source images, synthetic only
    reference_channel: int = 0


def load_input(cfg: RunConfig) -> Dataset:
    scfg = cfg.stft_config()
    if cfg.synthetic:
        _, _, name = cfg.input.partition(":")
        fx: Fixture = load_fixture(name or "default", seed=cfg.seed, stft_cfg=scfg)
        return Dataset(fx.X, fx.mixture, scfg, fx.images, fx.reference_channel)
    rate, x = read_wav(cfg.input)
    if rate != scfg.sample_rate:
        raise ValueError(
            f"{cfg.input}: sample rate {rate} Hz differs from configured {scfg.sample_rate} Hz (no resampling)"
        )
    if x.shape[1] < 2:
        raise ValueError(f"{cfg.input}: need a multichannel recording, got {x.shape[1]} channel(s)")
    return Dataset(stft(x, scfg), x, scfg)


@dataclass
class TrialResult:
    row: dict
    trace: list[float]
    separated: np.ndarray | None = None
    monotone: bool = True


def _run_trial(args) -> TrialResult:
    cfg, data, L, k = args
    seed_k = trial_seed(cfg.seed, k)
    p = trial_p(cfg, seed_k)
    res = run(data.X, OptimizerConfig(p=p, n_bases=L, iterations=cfg.iterations, seed=seed_k))
    trace = res.cost_trace
    diffs = np.diff(trace)
    monotone = bool(np.all(diffs <= MONOTONE_RTOL * np.abs(trace[:-1])))
    row = {
        "trial": k,
        "seed": seed_k,
        "p": p,
        "L": L,
        "iterations": cfg.iterations,
        "final_cost": trace[-1],
        "cost_trace_file": f"traces/L{L:03d}_trial{k:05d}.csv",
        "monotone": int(monotone),
    }
    N = data.X.shape[2]
    if data.references is not None:
        rep = evaluate_run(
            res.state, data.references, data.stft_cfg, data.reference_channel, mixture=data.mixture,
            p=p, seed=seed_k, iterations=cfg.iterations,
        )
        for n in range(N):
            row[f"sdr_before_{n + 1}"] = rep.sdr_before[n]
            row[f"sdr_after_{n + 1}"] = rep.sdr_after[n]
            row[f"sdr_improvement_{n + 1}"] = rep.improvement[n]
        row["sdr_improvement_mean"] = rep.mean_improvement
        row["permutation"] = " ".join(str(v + 1) for v in rep.permutation)
    separated = None
    if cfg.write_wavs:
        separated = istft(projection_back(res.state, data.reference_channel), data.stft_cfg, data.mixture.shape[0])
    return TrialResult(row, trace, separated, monotone)


def result_columns(n_sources: int) -> list[str]:
    cols = ["trial", "seed", "p", "L", "iterations", "final_cost", "cost_trace_file", "monotone"]
    for n in range(1, n_sources + 1):
        cols += [f"sdr_before_{n}", f"sdr_after_{n}", f"sdr_improvement_{n}"]
    return cols + ["sdr_improvement_mean", "permutation"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: Path, schema: str, columns: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    buf.write(schema + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_table(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


@dataclass
class ExperimentOutput:
    results_csv: Path
    rows: list[dict] = field(default_factory=list)
    all_monotone: bool = True


def run_experiment(cfg: RunConfig) -> ExperimentOutput:
    """Run every (L, trial) pair and write results.csv, cost traces and optional WAVs."""
    data = load_input(cfg)
    out = Path(cfg.output_dir)
    jobs = [(cfg, data, L, k) for L in cfg.L for k in range(cfg.trials)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(job) for job in jobs]

    rows = []
    for res in results:
        trace_path = out / res.row["cost_trace_file"]
        write_table(
            trace_path, "# pmeilrma-cost-trace v1", list(TRACE_HEADER),
            [{"iteration": c, "cost": v} for c, v in enumerate(res.trace)],
        )
        if res.separated is not None:
            stem = Path(res.row["cost_trace_file"]).stem
            for n in range(res.separated.shape[1]):
                write_wav(out / "wavs" / f"{stem}_source{n + 1}.wav", data.stft_cfg.sample_rate, res.separated[:, n])
        if not res.monotone:
            logger.warning("cost trace of L=%s trial %s is not monotone", res.row["L"], res.row["trial"])
        rows.append(res.row)
    results_csv = out / "results.csv"
    write_table(results_csv, RESULTS_SCHEMA, result_columns(data.X.shape[2]), rows)
    return ExperimentOutput(results_csv, rows, all(r.monotone for r in results))


def p_bin(p: float) -> str:
    """Right-closed bin label: 0.25 falls in ``(0,0.25]``."""
    for lo, hi in P_BINS:
        if lo < p <= hi:
            return f"({lo:g},{hi:g}]"
    raise ValueError(f"p={p} outside (0, 1]")


def summarize(csv_paths) -> list[dict]:
    """Count/mean/median of the mean SDR improvement per (L, p-bin)."""
    groups: dict[tuple[int, str], list[float]] = {}
    n_rows = 0
    for path in csv_paths:
        for row in read_table(path):
            n_rows += 1
            value = row.get("sdr_improvement_mean", "")
            if value == "":
                continue
            key = (int(row["L"]), p_bin(float(row["p"])))
            groups.setdefault(key, []).append(float(value))
    if n_rows == 0:
        raise ValueError("no result rows to summarize")
    if not groups:
        raise ValueError("no rows carry SDR improvements (ground truth is needed)")
    labels = [p_bin(hi) for _, hi in P_BINS]
    summary = []
    for L in sorted({L for L, _ in groups}):
        for label in labels:
            vals = groups.get((L, label), [])
            summary.append({
                "L": L,
                "p_bin": label,
                "count": len(vals),
                "mean_improvement": statistics.fmean(vals) if vals else None,
                "median_improvement": statistics.median(vals) if vals else None,
            })
    return summary


SUMMARY_COLUMNS = ["L", "p_bin", "count", "mean_improvement", "median_improvement"]


def write_summary(summary: list[dict], path) -> Path:
    path = Path(path)
    write_table(path, SUMMARY_SCHEMA, SUMMARY_COLUMNS, summary)
    return path


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, keys may use - or _."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
