"""Command-line entry point: build a configuration and serve it."""

from __future__ import annotations

import argparse
from pathlib import Path

import uvicorn

from .app import create_app
from .config import DEFAULT_PATCH_SIDE, MODES, NoiseParams, ServerConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docforge-model-server",
        description="Serve /recognize, /detect, and /healthz over HTTP.")
    parser.add_argument("--mode", choices=MODES, default="synthetic")
    parser.add_argument("--truth-dir", metavar="DIR",
                        help="ground-truth record tree "
                             "(<dir>/<doc_id>/<field>.json)")
    parser.add_argument("--substitution-rate", type=float, default=0.0,
                        metavar="R")
    parser.add_argument("--deletion-rate", type=float, default=0.0,
                        metavar="R")
    parser.add_argument("--insertion-rate", type=float, default=0.0,
                        metavar="R")
    parser.add_argument("--seed", type=int, default=0, metavar="N")
    parser.add_argument("--patch-side", type=int,
                        default=DEFAULT_PATCH_SIDE, metavar="N")
    parser.add_argument("--recognizer-model", default="", metavar="ID")
    parser.add_argument("--detector-model", default="", metavar="ID")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8601)
    return parser


def config_from_args(args: argparse.Namespace) -> ServerConfig:
    return ServerConfig(
        mode=args.mode,
        truth_dir=Path(args.truth_dir) if args.truth_dir else None,
        noise=NoiseParams(substitution_rate=args.substitution_rate,
                          deletion_rate=args.deletion_rate,
                          insertion_rate=args.insertion_rate,
                          seed=args.seed),
        patch_side=args.patch_side,
        recognizer_model=args.recognizer_model,
        detector_model=args.detector_model)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    uvicorn.run(create_app(config), host=args.host, port=args.port,
                log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
