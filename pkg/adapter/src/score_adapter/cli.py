"""CLI: finetune on (train, validation) files, then emit predictions for
any dataset file. Everything moves through files; no shared process with
the audit toolkit."""

from __future__ import annotations

import argparse
import sys

from .config import FinetuneConfig
from .data import AdapterError
from .emit import emit_predictions
from .finetune import finetune, load_trained


def cmd_finetune(args) -> int:
    if args.config:
        config = FinetuneConfig.from_json_file(args.config)
    else:
        config = FinetuneConfig()
    overrides = {}
    if args.encoder:
        overrides["encoder"] = args.encoder
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.learning_rate is not None:
        overrides["learning_rate"] = args.learning_rate
    if args.max_epochs is not None:
        overrides["max_epochs"] = args.max_epochs
    if overrides:
        config = FinetuneConfig.from_dict({**config.to_dict(), **overrides})
    trained = finetune(args.train, args.validation, config)
    trained.save(args.out)
    last = trained.log[-1]
    print(
        f"saved model to {args.out} (best epoch {trained.best_epoch}, "
        f"{len(trained.log)} epochs run, last val loss {last.validation_loss:.4f})"
    )
    return 0


def cmd_predict(args) -> int:
    trained = load_trained(args.model)
    count = emit_predictions(trained, args.dataset, args.out)
    print(f"wrote {count} predictions to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="score-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="train encoder + regression head")
    p.add_argument("--train", required=True, help="training JSONL (ingest schema)")
    p.add_argument("--validation", required=True, help="validation JSONL")
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--config", help="FinetuneConfig JSON")
    p.add_argument("--encoder", help="encoder name or 'fresh-tiny'")
    p.add_argument("--seed", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("predict", help="emit predictions exchange JSONL")
    p.add_argument("--model", required=True, help="model directory from finetune")
    p.add_argument("--dataset", required=True, help="dataset JSONL to score")
    p.add_argument("--out", required=True, help="predictions output path")
    p.set_defaults(func=cmd_predict)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
