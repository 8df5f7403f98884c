"""Scorer bridge CLI: finetune on exported bundles, emit score files."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ScorerConfig
from .data import read_bundle_texts, read_outcomes
from .score import load_checkpoint, score_bundles, write_scores
from .train import finetune

log = logging.getLogger(__name__)


def _labels(path: str) -> list[str]:
    return [l.strip() for l in Path(path).read_text(encoding="utf-8").splitlines()
            if l.strip()]


def _config_from_args(args: argparse.Namespace, n_articles: int) -> ScorerConfig:
    fields = dict(n_articles=n_articles)
    for name in ("encoder", "head_width", "batch_size", "epochs",
                 "learning_rate", "seed", "max_facts_len", "max_precedent_len"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    return ScorerConfig(**fields)


def cmd_finetune(args: argparse.Namespace) -> int:
    labels = _labels(args.articles)
    gold = read_outcomes(args.corpus, labels)
    train_bundles = [b for p in args.train_bundles for b in read_bundle_texts(p)]
    val_bundles = [b for p in (args.val_bundles or []) for b in read_bundle_texts(p)]
    config = _config_from_args(args, n_articles=len(labels))

    missing = [b.case_id for b in [*train_bundles, *val_bundles] if b.case_id not in gold]
    if missing:
        log.error("no outcomes for: %s", ", ".join(missing[:10]))
        return 1
    checkpoint = finetune(train_bundles, gold, config, val_bundles,
                          checkpoint_path=args.out)
    ce = checkpoint["best_validation_ce"]
    print(f"checkpoint written to {args.out}"
          + (f" (best validation CE {ce:.4f})" if ce is not None else ""))
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    if args.articles:
        n = len(_labels(args.articles))
        if n != checkpoint["config"]["n_articles"]:
            log.error("checkpoint emits %d articles but the article set has %d",
                      checkpoint["config"]["n_articles"], n)
            return 1
    bundles = [b for p in args.bundles for b in read_bundle_texts(p)]
    rows = score_bundles(checkpoint, bundles)
    write_scores(rows, args.out)
    print(f"wrote {len(rows)} score row(s) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precedent-scorer",
        description="Transformer scorer over conditioning-bundle files.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="train encoder + head on bundle files")
    p.add_argument("--train-bundles", nargs="+", required=True)
    p.add_argument("--val-bundles", nargs="*")
    p.add_argument("--corpus", required=True, help="corpus JSONL with outcomes")
    p.add_argument("--articles", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.pt)")
    p.add_argument("--encoder")
    p.add_argument("--head-width", type=int, dest="head_width")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-facts-len", type=int, dest="max_facts_len")
    p.add_argument("--max-precedent-len", type=int, dest="max_precedent_len")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("score", help="emit a score file for bundle files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bundles", nargs="+", required=True)
    p.add_argument("--articles", help="optional label file for a shape check")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
