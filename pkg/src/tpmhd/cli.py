"""Command line front end.

Each subcommand reads one key = value config file, runs the matching
driver, and writes its outputs into the requested directory.  Exit
status: 0 on success, 1 for unusable configuration, 2 when the
nonlinear or linear solver gives up.
"""

import argparse
import sys
from pathlib import Path

from .cases import run_converge, run_kh, run_spinodal
from .config import ConfigError, parse_config
from .scheme import SolverError
from .sparse import LinearSolveError

_DRIVERS = {
    "converge": run_converge,
    "spinodal": run_spinodal,
    "kh": run_kh,
}

_HELP = {
    "converge": "refinement sweep against the manufactured solution",
    "spinodal": "phase separation from seeded noise",
    "kh": "perturbed shear layer in a periodic channel",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tpmhd",
        description="two-phase conducting-fluid solver experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, driver_help in _HELP.items():
        cmd = sub.add_parser(name, help=driver_help)
        cmd.add_argument("--config", required=True,
                         help="path to a key = value run file")
        cmd.add_argument("--out", default=None,
                         help="output directory (default: the config's "
                              "output_dir, else the working directory)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(
                f"config declares experiment '{cfg.experiment}' but "
                f"'{args.command}' was invoked")
    except (ConfigError, OSError) as exc:
        print(f"tpmhd: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(args.out or cfg.output_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        _DRIVERS[args.command](cfg, out_dir)
    except (SolverError, LinearSolveError) as exc:
        print(f"tpmhd: solver failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
