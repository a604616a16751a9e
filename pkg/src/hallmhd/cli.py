"""Command-line entry point: ``hallmhd run`` and ``hallmhd validate``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import HallMHDError
from .field import set_fft_workers
from .runner import run_experiment


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hallmhd", description="Hall-MHD mild-solution workbench")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the job described by a config file")
    run.add_argument("config", type=Path)
    run.add_argument("--threads", type=int, default=1, help="FFT worker cap (default 1)")
    run.add_argument("--output", type=Path, default=None, help="output directory (overrides output_dir)")
    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config", type=Path)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"ok: {cfg.kind}")
            return 0
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        set_fft_workers(args.threads)
        out = args.output if args.output is not None else Path(cfg.output_dir)
        code = run_experiment(cfg, out, args.config.read_bytes())
    except HallMHDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if code:
        print(f"job {cfg.kind} failed with exit code {code}; see {out / 'reports' / 'failure.json'}", file=sys.stderr)
    else:
        print(f"job {cfg.kind} finished; artifacts in {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
