"""simgen command line: messages in, similarity matrix out.

Usage: ``simgen --messages messages.txt --out similarity.json [--model NAME@VERSION]``
with one message per line.  Exit codes: 0 success, 2 bad input, 3 runtime
failure (e.g. encoder model unavailable).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .encoders import DEFAULT_MODEL, EncoderUnavailableError, SimgenError, embed
from .matrix import write_similarity


def read_messages(path: Path) -> list[str]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise SimgenError(f"cannot read {path}: {exc}") from exc
    messages = [line.strip() for line in lines if line.strip()]
    if len(messages) < 2:
        raise SimgenError(f"{path}: need at least 2 non-empty lines, found {len(messages)}")
    return messages


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simgen",
        description="Generate a semantic-loss similarity matrix from candidate messages.",
    )
    parser.add_argument("--messages", required=True, help="text file, one message per line")
    parser.add_argument("--out", required=True, help="similarity.json to write")
    parser.add_argument(
        "--model",
        default=DEFAULT_MODEL,
        help=f"encoder as NAME@VERSION (default {DEFAULT_MODEL}; other names load "
        "pretrained sentence-transformers models)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        messages = read_messages(Path(args.messages))
        records = embed(messages, model=args.model)
        write_similarity(records, args.out, model=args.model)
    except EncoderUnavailableError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    except SimgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {args.out} for {len(messages)} messages using {args.model}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
