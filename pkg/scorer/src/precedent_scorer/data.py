"""Bundle JSONL ingestion and layout-preserving re-tokenization.

Bundles arrive with text_segments: ordered (case_id, kind, text) entries.
The scorer re-tokenizes each segment with its own scheme and re-applies
the layout caps: precedent material (outcome markers + precedent text)
jointly truncated to the precedent budget, current-case facts to the
facts budget. Overlong inputs are truncated, never an error.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

PAD, BOS, UNK = "<pad>", "<bos>", "<unk>"
_WORD_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class BundleText:
    """One bundle's text layout: ordered precedent segment texts + facts text."""

    case_id: str
    variant: str
    precedent_texts: tuple[str, ...]
    facts_text: str


def read_bundle_texts(path: str | Path) -> list[BundleText]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            segments = rec["text_segments"]
            facts_text = ""
            prec: list[str] = []
            for seg in segments:
                if seg["case_id"] == rec["case_id"] and seg["kind"] == "facts":
                    facts_text = seg["text"]
                else:
                    prec.append(seg["text"])
            out.append(BundleText(
                case_id=str(rec["case_id"]),
                variant=str(rec["variant"]),
                precedent_texts=tuple(prec),
                facts_text=facts_text,
            ))
    return out


def read_outcomes(corpus_path: str | Path, labels: Sequence[str]) -> dict[str, list[int]]:
    """Gold outcome bit-vectors from the corpus JSONL (pre-split form)."""
    index = {lab: i for i, lab in enumerate(labels)}
    gold: dict[str, list[int]] = {}
    with open(corpus_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            bits = [0] * len(labels)
            for lab in rec.get("outcome", ()):
                bits[index[lab]] = 1
            gold[str(rec["id"])] = bits
    return gold


class WordTokenizer:
    """Whitespace word-level scheme for the in-package encoder.

    Marker tokens like "<outcome>" survive as single units. Ids 0..2 are
    pad/bos/unk.
    """

    def __init__(self, vocab: dict[str, int]):
        self.vocab = vocab
        self.pad_id = vocab[PAD]
        self.bos_id = vocab[BOS]
        self.unk_id = vocab[UNK]

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 1) -> "WordTokenizer":
        counts: Counter[str] = Counter()
        for t in texts:
            counts.update(_WORD_RE.findall(t.lower()))
        vocab = {PAD: 0, BOS: 1, UNK: 2}
        for w in sorted((w for w, n in counts.items() if n >= min_freq),
                        key=lambda w: (-counts[w], w)):
            vocab[w] = len(vocab)
        return cls(vocab)

    def encode(self, text: str) -> list[int]:
        return [self.vocab.get(w, self.unk_id) for w in _WORD_RE.findall(text.lower())]

    def __len__(self) -> int:
        return len(self.vocab)


def layout_ids(
    bundle: BundleText,
    encode,
    max_facts_len: int,
    max_precedent_len: int,
) -> list[int]:
    """Token ids under the scorer's scheme, re-truncated per the layout."""
    ids: list[int] = []
    for text in bundle.precedent_texts:
        room = max_precedent_len - len(ids)
        if room <= 0:
            break
        ids.extend(encode(text)[:room])
    ids.extend(encode(bundle.facts_text)[:max_facts_len])
    return ids
