"""Command-line interface.

Subcommands: split, evaluate-detection, run, build-gazetteer,
evaluate-ocr. All of them read one JSON configuration file; a few flags
override config values per invocation. Exit codes: 0 success, 1
configuration (or usage) error, 2 backend unreachable, 3 partial
document failures.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import BackendError, ConfigurationError, DocforgeError
from .pipeline import (
    EXIT_BACKEND,
    EXIT_CONFIG,
    cmd_build_gazetteer,
    cmd_evaluate_detection,
    cmd_evaluate_ocr,
    cmd_run,
    cmd_split,
    load_config,
)

log = logging.getLogger("docforge")


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="pipeline configuration file (JSON)")
    common.add_argument("--backend", choices=("fixture", "remote"),
                        help="override the configured backend kind")
    common.add_argument("--out", metavar="DIR",
                        help="override the report output directory")
    common.add_argument("--workers", type=int, metavar="N",
                        help="override the worker pool size")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the dataset split seed")
    common.add_argument("--verbose", action="store_true",
                        help="enable debug logging")

    parser = _Parser(
        prog="docforge",
        description="Batch toolkit for handwritten-form field extraction: "
                    "detection scoring, pluggable recognition backends, and "
                    "gazetteer-based post-correction.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")
    sub.add_parser("split", parents=[common],
                   help="partition the corpus and write a manifest")
    sub.add_parser("evaluate-detection", parents=[common],
                   help="score field localization against annotations")
    sub.add_parser("run", parents=[common],
                   help="full pipeline with combined report")
    build = sub.add_parser("build-gazetteer", parents=[common],
                           help="persist the TF-IDF index for one field")
    build.add_argument("--field", required=True, metavar="LABEL",
                       help="field whose gazetteer to index")
    build.add_argument("--ngram-size", type=int, metavar="N",
                       help="character n-gram size (default from config)")
    sub.add_parser("evaluate-ocr", parents=[common],
                   help="score recognition on annotated fields, raw vs "
                        "corrected")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config, backend_kind=args.backend,
                             out_dir=args.out, workers=args.workers,
                             seed=args.seed)
        if args.command == "split":
            return cmd_split(config)
        if args.command == "evaluate-detection":
            return cmd_evaluate_detection(config)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "build-gazetteer":
            return cmd_build_gazetteer(config, args.field, args.ngram_size)
        return cmd_evaluate_ocr(config)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except BackendError as exc:
        log.error("backend error: %s", exc)
        return EXIT_BACKEND
    except DocforgeError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
