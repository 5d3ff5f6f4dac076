"""``swrrst`` command line: run the pipeline or any prefix of it.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(singular denominator, divergence), 4 capacity exceeded, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import RunConfig
from .errors import CapacityError, ConfigError, NumericalError, ParseError, SwrrstError, ValidationError
from .pipeline import Pipeline, emit_report

SUBCOMMANDS = {
    "decompose": "decompose",
    "solve": "solve",
    "map": "map",
    "evolve": "evolve",
    "qpe": "qpe",
    "verify": "verify",
    "run": "verify",
}

log = logging.getLogger("swrrst")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swrrst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the pipeline through the {SUBCOMMANDS[name]} stage")
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--stage-cache", choices=("on", "off"), default="off",
                       help="reuse a persisted solve when the config hash matches")
        p.add_argument("--format", choices=("structured", "tabular", "both"), default="both",
                       help="report format written at the end")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, ParseError, ValidationError)):
        return 2
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, CapacityError):
        return 4
    return 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = RunConfig.load(args.config)
        if args.seed is not None:
            config = config.replace(("seed",), args.seed)
    except SwrrstError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)

    pipe = Pipeline(config, args.out, stage_cache=args.stage_cache == "on")
    try:
        if args.command == "verify":
            pipe.resume()
            pipe.run_stages(["verify"])
        else:
            pipe.run(SUBCOMMANDS[args.command])
    except SwrrstError as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"error in stage {stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        emit_report(pipe.bundle, pipe.out, "structured")
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    formats = ("structured", "tabular") if args.format == "both" else (args.format,)
    for fmt in formats:
        for path in emit_report(pipe.bundle, pipe.out, fmt):
            log.info("wrote %s", path)
    print(f"{args.command}: ok ({', '.join(pipe.bundle.stages)}) -> {pipe.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
