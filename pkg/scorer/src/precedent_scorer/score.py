"""Batch inference: checkpoint + bundles -> score file in the shared format."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import torch

from .config import ScorerConfig
from .data import BundleText, WordTokenizer
from .model import build_model
from .train import make_batches


def load_checkpoint(path: str | Path) -> dict:
    return torch.load(path, weights_only=False)


def score_bundles(checkpoint: dict, bundles: Sequence[BundleText]) -> list[dict]:
    """Per-bundle probability rows {"case_id", "variant", "probs"}."""
    config = ScorerConfig.from_dict(checkpoint["config"])
    tokenizer = WordTokenizer(checkpoint["vocab"])
    model = build_model(config, vocab_size=len(tokenizer))
    model.load_state_dict(checkpoint["state_dict"])
    model.eval()

    rows = []
    with torch.no_grad():
        for ids, mask, _, members in make_batches(bundles, None, config, tokenizer):
            probs = torch.sigmoid(model(ids, mask))
            if probs.shape[1] != config.n_articles:
                raise RuntimeError(
                    f"article-count mismatch: head emits {probs.shape[1]}, "
                    f"config says {config.n_articles}"
                )
            for b, p in zip(members, probs):
                rows.append({
                    "case_id": b.case_id,
                    "variant": b.variant,
                    "probs": [float(x) for x in p],
                })
    return rows


def write_scores(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")
