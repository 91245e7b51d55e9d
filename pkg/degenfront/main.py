import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from degenfront import __version__
from degenfront.commands import run_subcommand
from degenfront.constants.defaults import ExitCode, Subcommand
from degenfront.exceptions import ConfigError
from degenfront.schemas.config import RunConfig, parse_config

HELP = {
    Subcommand.FRONT: "Solve the stationary front and write profile.csv + profile.json",
    Subcommand.SPECTRUM: "Eigen-analysis of the linearized operator around the front",
    Subcommand.EVOLVE: "Linear semigroup decay and nonlinear perturbation runs",
    Subcommand.SWEEP: "eps-regularization sweep of the spectrum",
    Subcommand.CHECK: "Run the acceptance suite; exit 1 on any failure",
    Subcommand.REPORT: "Write report.json and report.txt",
}


def configure_logging(level: Optional[str]) -> None:
    name = (level or os.getenv("DEGENFRONT_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def load_config(args: argparse.Namespace) -> RunConfig:
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", key="--config", path=args.config) from exc
    cfg = parse_config(text)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative", key="--seed")
        overrides["seed"] = args.seed
    if overrides:
        # keep the private inline-kinetics flag of the parsed config
        cfg = cfg.model_copy(update=overrides)
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"❌ config error: {exc}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    result = run_subcommand(args.command, cfg)
    if result.error:
        print(f"❌ {args.command}: {result.error}", file=sys.stderr)
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degenfront", description="Degenerate Nagumo front laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in Subcommand:
        p = sub.add_parser(name.value, help=HELP[name])
        p.add_argument("--config", type=str, default=None, help="Path to a JSON run config")
        p.add_argument("--out", type=str, default=None, help="Output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=None, help="Random seed (overrides seed)")
        p.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING or ERROR")
        p.set_defaults(func=_cmd_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    return int(args.func(args))


if __name__ == "__main__":
    raise SystemExit(main())
