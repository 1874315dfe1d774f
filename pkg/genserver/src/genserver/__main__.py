"""Serve a model: python -m genserver --model <checkpoint|echo> --port N."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from genserver.app import build_app
from genserver.config import ServeConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genserver", description="Serve /generate and /score over HTTP."
    )
    parser.add_argument("--model", required=True, help="checkpoint directory, or 'echo'")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--max-source-length", type=int, default=2048)
    parser.add_argument("--max-target-length", type=int, default=256)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--beam-width", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ServeConfig(
            model=args.model,
            max_source_length=args.max_source_length,
            max_target_length=args.max_target_length,
            device=args.device,
            batch_size=args.batch_size,
            beam_width=args.beam_width,
        )
        app = build_app(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
