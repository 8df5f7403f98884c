"""Scorer configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path


@dataclass(frozen=True)
class ScorerConfig:
    """Encoder choice, head shape and training knobs.

    encoder: "tiny:<dim>x<layers>" for the in-package randomly initialized
    transformer (word-level vocabulary built from the training bundles), or
    "hf:<model_id>" for a pretrained Hugging Face encoder (requires the
    `transformers` package and a reachable model cache).
    """

    encoder: str = "tiny:64x2"
    n_articles: int = 2
    head_width: int = 50           # hidden width of the output head
    batch_size: int = 16
    max_facts_len: int = 512
    max_precedent_len: int = 512
    epochs: int = 3
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_articles < 1:
            raise ValueError("n_articles must be >= 1")
        if self.head_width < 1 or self.batch_size < 1:
            raise ValueError("head_width and batch_size must be >= 1")
        if self.max_facts_len <= 0 or self.max_precedent_len <= 0:
            raise ValueError("max lengths must be positive")
        kind = self.encoder.split(":", 1)[0]
        if kind not in ("tiny", "hf"):
            raise ValueError(f"unknown encoder spec {self.encoder!r}")

    @property
    def max_total_len(self) -> int:
        return self.max_facts_len + self.max_precedent_len

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScorerConfig":
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ScorerConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2),
                              encoding="utf-8")
