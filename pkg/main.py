#!/usr/bin/env python3
"""
viscowave – entrypoint.
Green's functions of viscoelastic media near the wavefront: attenuation/dispersion
curves, the Green's field, wavefront reports, the creep/relaxation duality and the
verification suites.

Run: python main.py curves --config configs/zener.yaml
      python main.py greens --config configs/powerlaw_g.yaml --threads 4
      python main.py wavefront --config configs/zener.yaml --out out/
      python main.py duality --config configs/zener.yaml
      python main.py verify              # built-in catalog, no config needed
Exit codes: 0 success, 2 config error, 3 computation error, 4 verification failure.
"""

import argparse
import logging
import sys
from pathlib import Path

# Ensure project root is on path
sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.config import LOG_LEVEL

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_VERIFY = 0, 2, 3, 4
TASKS = ("curves", "greens", "wavefront", "verify", "duality")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Viscoelastic Green's functions near the wavefront")
    parser.add_argument("task", choices=TASKS, help="What to compute")
    parser.add_argument("--config", metavar="PATH", help="YAML run configuration (optional for verify)")
    parser.add_argument("--out", metavar="DIR", help="Output directory (overrides output.directory)")
    parser.add_argument("--tol", type=float, help="Tolerance override (verify checks, duality residual)")
    parser.add_argument("--threads", type=int, help="Worker threads for grid evaluation")
    parser.add_argument("--format", choices=("csv", "json"), help="Table format (overrides output.format)")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level (default from LOG_LEVEL)")
    return parser


def _load_config(args: argparse.Namespace):
    from src.models import ElasticBlock, RunConfig, TaskBlock, load_run_config

    if args.config:
        config = load_run_config(args.config)
    elif args.task == "verify":
        config = RunConfig(model=ElasticBlock(kind="elastic", J0=1.0), task=TaskBlock(kind="verify"))
    else:
        from src.errors import ConfigError
        raise ConfigError(f"task '{args.task}' needs --config")

    # The subcommand wins over task.kind; CLI flags win over the output block.
    output = config.output.model_copy(update={
        key: value for key, value in {
            "format": args.format,
            "tolerance": args.tol,
            "threads": args.threads,
        }.items() if value is not None
    })
    task = config.task.model_copy(update={"kind": args.task})
    return config.model_copy(update={"output": output, "task": task})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    from src.errors import ConfigError, VerificationFailure, ViscoWaveError

    try:
        config = _load_config(args)
    except ConfigError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        print(f"Config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("Config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    from src.runner import run

    out_dir = Path(args.out) if args.out else None
    try:
        result = run(config, out_dir)
    except VerificationFailure as exc:
        directory = out_dir or Path(config.output.directory)
        print(f"Verification failed: {exc}", file=sys.stderr)
        print(f"Summary in {directory / (config.output.prefix + '_verify.txt')}", file=sys.stderr)
        return EXIT_VERIFY
    except (ViscoWaveError, FloatingPointError) as exc:
        print(f"Computation error in task '{args.task}' ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    for path in result.files:
        print(f"Wrote {path}")
    print(f"Task {result.task}: {result.rows} rows")
    if result.flagged:
        print(f"Warning: {result.flagged} samples flagged (see the flag columns)", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
