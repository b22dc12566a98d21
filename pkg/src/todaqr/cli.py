"""``todaqr`` command line: one subcommand per experiment.

On success the summary path is printed to stdout and the exit code is 0.
Failures print a one-line JSON object to stderr: exit 2 for configuration
errors, 1 for anything raised while running.
"""
import argparse
import json
import sys

from . import __version__
from .config import COMMANDS, parse_config
from .errors import ConfigError, TodaQRError
from .harness import default_output_dir, run, write_outputs


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="todaqr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"todaqr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="JSON configuration file")
        p.add_argument("--preset", metavar="NAME", help="named configuration")
        p.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
        p.add_argument("--trials", type=int, metavar="N")
        p.add_argument("--out", metavar="DIR", help="output directory (default runs/COMMAND)")
        p.add_argument("--workers", type=int, metavar="K")
    return parser


def _fail(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["field"] = exc.field
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.preset, args.command, seed=args.seed, trials=args.trials,
                           out=args.out, workers=args.workers)
    except ConfigError as exc:
        return _fail(exc, 2)
    try:
        result = run(cfg)
        paths = write_outputs(result, default_output_dir(cfg))
    except (TodaQRError, ValueError, ArithmeticError, OSError) as exc:
        return _fail(exc, 1)
    print(paths["summary"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
