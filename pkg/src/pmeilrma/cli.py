"""Command-line driver: ``pmeilrma [--subcommand run|summarize] ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiment import (
    RunConfig,
    parse_config_file,
    run_experiment,
    summarize,
    write_summary,
)
from .stft import StftConfig

log = logging.getLogger("pmeilrma")

CONFIG_KEYS = ("input", "p", "L", "iterations", "trials", "seed", "fft_length", "shift",
               "sample_rate", "output_dir", "write_wavs", "jobs")
_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pmeilrma",
        description="ILRMA blind source separation with parametric ME source-model updates.",
    )
    ap.add_argument("--subcommand", choices=("run", "summarize"), default="run")
    ap.add_argument("--config", help="flat 'key = value' config file; command-line flags win")
    ap.add_argument("--input", help="multichannel WAV path or synthetic:<fixture> (default synthetic:default)")
    ap.add_argument("--p", help="convergence-speed parameter in (0, 1], or 'random'")
    ap.add_argument("--L", help="basis count(s), comma separated (default 10,20,40,60)")
    ap.add_argument("--iterations", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--fft-length", type=int)
    ap.add_argument("--shift", type=int)
    ap.add_argument("--sample-rate", type=int)
    ap.add_argument("--output-dir")
    ap.add_argument("--write-wavs", action="store_true", default=None)
    ap.add_argument("--jobs", type=int, help="parallel worker processes for trials")
    ap.add_argument("paths", nargs="*", help="results CSVs (summarize only)")
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    unknown = set(values) - set(CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    kwargs = {}
    if "input" in values:
        kwargs["input"] = str(values["input"])
    if "p" in values:
        p = str(values["p"]).strip()
        kwargs["p"] = "random" if p.lower() == "random" else p
    if "L" in values:
        kwargs["L"] = _int_list(values["L"])
    for key in ("iterations", "trials", "seed", "jobs"):
        if key in values:
            kwargs[key] = int(values[key])
    if "output_dir" in values:
        kwargs["output_dir"] = str(values["output_dir"])
    if "write_wavs" in values:
        v = values["write_wavs"]
        kwargs["write_wavs"] = v if isinstance(v, bool) else _BOOL[str(v).lower()]
    geometry = {k: int(values[k]) for k in ("fft_length", "shift", "sample_rate") if k in values}
    cfg = RunConfig(**kwargs)
    if geometry:
        base = cfg.stft_config()
        fft_length = geometry.get("fft_length", base.fft_length)
        default_shift = base.shift if "fft_length" not in geometry else fft_length // 2
        stft = StftConfig(
            fft_length=fft_length,
            shift=geometry.get("shift", default_shift),
            sample_rate=geometry.get("sample_rate", base.sample_rate),
        )
        cfg = RunConfig(**{**kwargs, "stft": stft})
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "summarize":
            if not args.paths:
                raise ValueError("summarize needs at least one results CSV")
            summary = summarize(args.paths)
            out_dir = Path(args.output_dir or Path(args.paths[0]).parent)
            path = write_summary(summary, out_dir / "summary.csv")
            sys.stdout.write(path.read_text(encoding="utf-8"))
            return 0
        if args.paths:
            raise ValueError(f"unexpected positional arguments: {args.paths}")
        cfg = resolve_config(args)
        out = run_experiment(cfg)
        log.info("wrote %d rows to %s", len(out.rows), out.results_csv)
        if not out.all_monotone:
            log.warning("some cost traces were not monotone")
        return 0
    except (ValueError, KeyError, OSError) as exc:
        print(f"pmeilrma: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
