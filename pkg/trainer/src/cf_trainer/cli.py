"""cf-trainer command line: train / predict / report.

Typical experiment over the four dataset variants produced by the pipeline:

    cf-trainer train original.jsonl --variant original -o runs/original
    cf-trainer predict runs/original/checkpoint.pt original.jsonl \
        -o runs/original/predictions.csv
    ... (repeat per variant; predict always scores the shared original
         manifest so every method faces identical test frames) ...
    cf-trainer report original.jsonl split.json -o runs/table \
        --predictions original=runs/original/predictions.csv \
        --predictions ours=runs/ours/predictions.csv
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import TrainerError
from .predicting import predict
from .reporting import report
from .training import TrainSpec, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cf-trainer")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one dataset variant")
    p.add_argument("manifest")
    p.add_argument("--variant", default="original",
                   choices=["original", "smogn", "importance", "ours"])
    p.add_argument("-o", "--output", required=True, help="run directory")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=224)
    p.add_argument("--height", type=int, default=74)

    p = sub.add_parser("predict", help="score a manifest subset with a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="predictions CSV path")
    p.add_argument("--subset", default="test", choices=["test", "all"])

    p = sub.add_parser("report", help="method x subset RMSE/MAE comparison")
    p.add_argument("manifest")
    p.add_argument("split")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--predictions", action="append", required=True,
                   metavar="NAME=CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s %(message)s",
    )
    try:
        if args.command == "train":
            spec = TrainSpec(
                manifest_path=args.manifest,
                variant=args.variant,
                image_size=(args.width, args.height),
                epochs=args.epochs,
                learning_rate=args.lr,
                batch_size=args.batch_size,
                seed=args.seed,
            )
            path = train(spec, args.output)
            print(path)
        elif args.command == "predict":
            predict(args.checkpoint, args.manifest, args.output,
                    subset=args.subset)
        else:
            csvs = {}
            for pair in args.predictions:
                name, _, path = pair.partition("=")
                if not path:
                    raise TrainerError(f"--predictions expects NAME=CSV, got {pair!r}")
                csvs[name] = path
            report(args.manifest, args.split, csvs, args.output)
        return 0
    except TrainerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
