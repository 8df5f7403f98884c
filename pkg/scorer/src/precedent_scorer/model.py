"""Encoder + two-layer sigmoid head.

The pooled representation is the sequence-start token's final embedding
h; per-article violation probabilities are sigmoid(W1 ReLU(W2 h)) with
W2: (head_width x d_encoder) and W1: (n_articles x head_width).
"""

from __future__ import annotations

import torch
from torch import nn

from .config import ScorerConfig


class TinyEncoder(nn.Module):
    """Small randomly initialized transformer encoder (word-level inputs)."""

    def __init__(self, vocab_size: int, dim: int, layers: int, max_len: int):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, dim, padding_idx=0)
        self.pos = nn.Embedding(max_len + 1, dim)          # +1 for the start token
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=4, dim_feedforward=4 * dim,
            dropout=0.0, batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers,
                                             enable_nested_tensor=False)
        self.dim = dim

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        x = self.embed(ids) + self.pos(positions)
        out = self.encoder(x, src_key_padding_mask=~mask)
        return out[:, 0]                                    # sequence-start embedding


class HFEncoder(nn.Module):
    """Pretrained Hugging Face encoder (needs `transformers` + model cache)."""

    def __init__(self, model_id: str):
        super().__init__()
        try:
            from transformers import AutoModel
        except ImportError as e:
            raise RuntimeError("hf: encoders require the transformers package") from e
        self.inner = AutoModel.from_pretrained(model_id)
        self.dim = self.inner.config.hidden_size

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        out = self.inner(input_ids=ids, attention_mask=mask.long())
        return out.last_hidden_state[:, 0]


class ScorerModel(nn.Module):
    def __init__(self, encoder: nn.Module, n_articles: int, head_width: int):
        super().__init__()
        self.encoder = encoder
        self.hidden = nn.Linear(encoder.dim, head_width)    # W2
        self.output = nn.Linear(head_width, n_articles)     # W1
        self.n_articles = n_articles

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Logits of per-article violation probabilities."""
        h = self.encoder(ids, mask)
        return self.output(torch.relu(self.hidden(h)))


def build_tiny_model(config: ScorerConfig, vocab_size: int) -> ScorerModel:
    dim_s, layers_s = config.encoder.split(":", 1)[1].split("x")
    encoder = TinyEncoder(vocab_size, int(dim_s), int(layers_s),
                          max_len=config.max_total_len)
    return ScorerModel(encoder, config.n_articles, config.head_width)


def build_model(config: ScorerConfig, vocab_size: int | None = None) -> ScorerModel:
    kind, _, arg = config.encoder.partition(":")
    if kind == "tiny":
        if vocab_size is None:
            raise ValueError("tiny encoder needs a vocabulary size")
        return build_tiny_model(config, vocab_size)
    return ScorerModel(HFEncoder(arg), config.n_articles, config.head_width)
