"""Command-line entry point: frame-infer or python -m frame_infer."""

from __future__ import annotations

import argparse
import sys

from .infer import DEFAULT_THRESHOLD, LABELS, InferenceConfig, infer


def parse_thresholds(values) -> dict[str, float]:
    """Each --threshold is either a bare number (all labels) or label=number."""
    out: dict[str, float] = {}
    default = None
    for v in values or ():
        if "=" in v:
            lab, _, num = v.partition("=")
            out[lab.strip()] = float(num)
        else:
            default = float(v)
    if default is not None:
        for lab in LABELS:
            out.setdefault(lab, default)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frame-infer",
        description="Label a posts JSONL file with a fine-tuned multi-label classifier.",
    )
    parser.add_argument("--model", required=True, help="model directory or hub id")
    parser.add_argument("--posts", required=True, help="input posts JSONL")
    parser.add_argument("--out", required=True, help="output labels JSONL")
    parser.add_argument(
        "--threshold",
        action="append",
        metavar="T|label=T",
        help=f"decision threshold, repeatable per label (default {DEFAULT_THRESHOLD})",
    )
    parser.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    parser.add_argument("--max-length", type=int, default=256, dest="max_length")
    parser.add_argument(
        "--scores", action="store_true", help="emit sigmoid scores alongside labels"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        import transformers

        transformers.utils.logging.disable_progress_bar()
        config = InferenceConfig(
            model=args.model,
            posts=args.posts,
            out=args.out,
            thresholds=parse_thresholds(args.threshold),
            batch_size=args.batch_size,
            max_length=args.max_length,
            emit_scores=args.scores,
        )
        report = infer(config)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    counts = ", ".join(f"{lab} {report.n_positive[lab]}" for lab in LABELS)
    print(f"labeled {report.n_posts} posts ({counts})")
    return 0


def main_entry() -> None:
    raise SystemExit(main())
