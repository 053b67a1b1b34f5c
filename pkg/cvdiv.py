#@title cvdiv Entry Point, Execute Process!
# Example: python cvdiv.py ent-sweep --config configs/ent_sweep_lognormal.json --seed 7 --threads 4

import argparse
import sys

from application import Application
from run_config_loader import COMMANDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvdiv",
        description="Diversity-assisted Earth-to-satellite CV quantum channel simulations.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration.")
    parser.add_argument("--seed", type=int, default=None, help="Overrides sampling.seed.")
    parser.add_argument("--out", default=None, help="Overrides output.path.")
    parser.add_argument("--threads", type=int, default=None,
                        help="Worker processes (falls back to CVDIV_THREADS, then 1).")
    parser.add_argument("--dry-run", action="store_true", help="Print the resolved configuration and exit.")
    parser.add_argument("--quiet", action="store_true", help="Suppress progress output.")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    app = Application(verbose=not args.quiet)
    return app.run(args.command, args.config, seed=args.seed, out=args.out, threads=args.threads,
                   dry_run=args.dry_run)


if __name__ == "__main__":
    sys.exit(main())
