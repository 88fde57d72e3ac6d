"""Command-line entry point.

Subcommands: simulate, limit, convergence, renewal-check, identity-check,
ml-eval. Shared flags: --config <file>, --seed <u64>, --workers <n>,
--out <dir>. ml-eval additionally takes --input (defaults to stdin) and
streams one value per (alpha, beta, z) line.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import KINDS, config_from_mapping, run_experiment
from .mlf import ml


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="roughinar",
        description="Simulation lab for nearly-unstable INAR processes and "
                    "their rough fractional diffusion limits.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override seed_base")
        p.add_argument("--workers", type=int, default=None,
                       help="override worker_count")
        p.add_argument("--out", type=Path, default=None,
                       help="override output_dir")
        if kind == "ml-eval":
            p.add_argument("--input", type=Path, default=None,
                           help="text stream of 'alpha beta z' triples "
                                "(default: stdin)")
    return parser


def _load_config(args):
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config} must hold a JSON object")
    if args.seed is not None:
        data["seed_base"] = args.seed
    if args.workers is not None:
        data["worker_count"] = args.workers
    if args.out is not None:
        data["output_dir"] = str(args.out)
    return config_from_mapping(data, kind=args.kind)


def _ml_eval(args):
    if args.input is not None:
        stream = open(args.input)
    else:
        stream = sys.stdin
    out = sys.stdout
    out_path = None
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        out_path = args.out / "ml_values.txt"
        out = open(out_path, "w")
    try:
        for line in stream:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            alpha, beta, z = (float(tok) for tok in line.split())
            out.write(f"{ml(alpha, beta, z):.17g}\n")
    finally:
        if stream is not sys.stdin:
            stream.close()
        if out is not sys.stdout:
            out.close()
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.kind == "ml-eval":
            return _ml_eval(args)
        config = _load_config(args)
        manifest = run_experiment(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{config.kind}: wrote {len(manifest.files)} files to "
          f"{config.output_dir} in {manifest.wall_clock_s:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
