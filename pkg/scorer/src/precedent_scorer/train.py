"""Fine-tuning with summed binary cross-entropy and best-validation selection."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .config import ScorerConfig
from .data import BundleText, WordTokenizer, layout_ids
from .model import build_model

log = logging.getLogger(__name__)


def _encode_fn(config: ScorerConfig, tokenizer):
    if config.encoder.startswith("tiny:"):
        return tokenizer.encode
    from transformers import AutoTokenizer  # hf path

    hf_tok = AutoTokenizer.from_pretrained(config.encoder.split(":", 1)[1])
    return lambda text: hf_tok(text, add_special_tokens=False)["input_ids"]


def make_batches(
    bundles: Sequence[BundleText],
    gold: dict[str, list[int]] | None,
    config: ScorerConfig,
    tokenizer: WordTokenizer,
    encode=None,
) -> list[tuple[torch.Tensor, torch.Tensor, torch.Tensor, list[BundleText]]]:
    """(ids, mask, labels, bundles) batches; start token prepended, padded."""
    encode = encode or _encode_fn(config, tokenizer)
    bos, pad = tokenizer.bos_id, tokenizer.pad_id
    rows = []
    for b in bundles:
        ids = [bos] + layout_ids(b, encode, config.max_facts_len, config.max_precedent_len)
        labels = gold[b.case_id] if gold is not None else [0] * config.n_articles
        rows.append((ids, labels, b))

    batches = []
    for start in range(0, len(rows), config.batch_size):
        chunk = rows[start:start + config.batch_size]
        width = max(len(ids) for ids, _, _ in chunk)
        ids_t = torch.full((len(chunk), width), pad, dtype=torch.long)
        mask_t = torch.zeros((len(chunk), width), dtype=torch.bool)
        labels_t = torch.zeros((len(chunk), config.n_articles))
        members = []
        for i, (ids, labels, b) in enumerate(chunk):
            ids_t[i, :len(ids)] = torch.tensor(ids, dtype=torch.long)
            mask_t[i, :len(ids)] = True
            labels_t[i] = torch.tensor(labels, dtype=torch.float32)
            members.append(b)
        batches.append((ids_t, mask_t, labels_t, members))
    return batches


def summed_bce(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Per-case binary cross-entropy summed over articles, averaged over cases (nats)."""
    per_element = nn.functional.binary_cross_entropy_with_logits(
        logits, labels, reduction="none")
    return per_element.sum(dim=1).mean()


@torch.no_grad()
def evaluate_ce(model, batches) -> float:
    model.eval()
    total, n = 0.0, 0
    for ids, mask, labels, _ in batches:
        logits = model(ids, mask)
        per_case = nn.functional.binary_cross_entropy_with_logits(
            logits, labels, reduction="none").sum(dim=1)
        total += float(per_case.sum())
        n += len(per_case)
    return total / max(n, 1)


def finetune(
    train_bundles: Sequence[BundleText],
    gold: dict[str, list[int]],
    config: ScorerConfig,
    val_bundles: Sequence[BundleText] = (),
    checkpoint_path: str | Path | None = None,
) -> dict:
    """Train encoder + head; retain the best-validation state.

    Returns the checkpoint payload (also written to checkpoint_path when
    given): config, vocabulary and model state.
    """
    torch.manual_seed(config.seed)
    tokenizer = WordTokenizer.build(
        [t for b in train_bundles for t in (*b.precedent_texts, b.facts_text)]
    )
    model = build_model(config, vocab_size=len(tokenizer))
    train_batches = make_batches(train_bundles, gold, config, tokenizer)
    val_batches = make_batches(val_bundles, gold, config, tokenizer) if val_bundles else []

    opt = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    best_ce = math.inf
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    if val_batches:
        best_ce = evaluate_ce(model, val_batches)

    for epoch in range(1, config.epochs + 1):
        model.train()
        epoch_loss = 0.0
        for ids, mask, labels, _ in train_batches:
            opt.zero_grad()
            loss = summed_bce(model(ids, mask), labels)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach())
        if val_batches:
            val_ce = evaluate_ce(model, val_batches)
            log.info("epoch %d: train loss %.4f, validation CE %.4f",
                     epoch, epoch_loss / len(train_batches), val_ce)
            if val_ce < best_ce:
                best_ce = val_ce
                best_state = {k: v.clone() for k, v in model.state_dict().items()}
        else:
            best_state = {k: v.clone() for k, v in model.state_dict().items()}

    checkpoint = {
        "config": config.to_dict(),
        "vocab": tokenizer.vocab,
        "state_dict": best_state,
        "best_validation_ce": best_ce if val_batches else None,
    }
    if checkpoint_path is not None:
        torch.save(checkpoint, checkpoint_path)
    return checkpoint
