"""Conditioning bundles: tokenization and the truncated concatenation layout.

Three bundle variants condition an outcome model on different material:

  facts      current case facts, truncated to 512 tokens
  halsbury   precedent outcomes + precedent *arguments* (jointly truncated
             to 512), then current facts (512)
  goodhart   precedent outcomes + precedent *facts*, same layout

Precedent material is laid out in citation order, each precedent preceded
by its outcome serialization (one delimiter token, then one marker token
per violated article). Truncation always keeps the earliest tokens.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import ArticleSet, Case, CitationGraph

log = logging.getLogger(__name__)

FACTS_BUDGET = 512
PRECEDENT_BUDGET = 512

UNK_TOKEN = "<unk>"
OUTCOME_TOKEN = "<outcome>"

_WORD_RE = re.compile(r"\w+|[^\w\s]")


class BundleError(Exception):
    """A bundle cannot be assembled for this case/variant."""


class Variant(str, Enum):
    FACTS = "facts"
    HALSBURY = "halsbury"
    GOODHART = "goodhart"


class SegmentKind(str, Enum):
    FACTS = "facts"
    ARGUMENTS = "arguments"
    OUTCOME = "outcome-marker"


def violation_token(label: str) -> str:
    return f"<viol:{label}>"


@dataclass(frozen=True)
class Tokenizer:
    """Deterministic lowercase word/punctuation tokenizer with a fixed vocabulary.

    Reserved entries (unk, outcome delimiter, one violation marker per
    article) occupy the lowest ids; corpus tokens follow in frequency
    order. Ids are dense in [0, vocab size).
    """

    vocab: dict[str, int]
    unk_id: int
    article_labels: tuple[str, ...]
    min_freq: int = 5

    def __len__(self) -> int:
        return len(self.vocab)

    @property
    def outcome_id(self) -> int:
        return self.vocab[OUTCOME_TOKEN]

    def violation_id(self, label: str) -> int:
        return self.vocab[violation_token(label)]

    def tokenize(self, text: str) -> list[int]:
        vocab = self.vocab
        unk = self.unk_id
        return [vocab.get(w, unk) for w in _WORD_RE.findall(text.lower())]

    def to_dict(self) -> dict:
        return {
            "vocab": self.vocab,
            "unk_id": self.unk_id,
            "article_labels": list(self.article_labels),
            "min_freq": self.min_freq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tokenizer":
        return cls(
            vocab={str(k): int(v) for k, v in d["vocab"].items()},
            unk_id=int(d["unk_id"]),
            article_labels=tuple(d["article_labels"]),
            min_freq=int(d["min_freq"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Tokenizer":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def tokenize(text: str, tok: Tokenizer) -> list[int]:
    """Deterministic token-id sequence; out-of-vocabulary words map to unk."""
    return tok.tokenize(text)


def build_tokenizer(cases: Iterable[Case], articles: ArticleSet, min_freq: int = 5) -> Tokenizer:
    """Count word frequencies over facts+arguments and freeze a vocabulary.

    Words below min_freq map to unk. Ordering (reserved ids first, then by
    descending frequency, ties lexicographic) makes rebuilds byte-identical.
    """
    counts: Counter[str] = Counter()
    for c in cases:
        counts.update(_WORD_RE.findall(c.facts.lower()))
        counts.update(_WORD_RE.findall(c.arguments.lower()))

    vocab: dict[str, int] = {UNK_TOKEN: 0, OUTCOME_TOKEN: 1}
    for label in articles.labels:
        vocab[violation_token(label)] = len(vocab)
    kept = sorted(
        (w for w, n in counts.items() if n >= min_freq and w not in vocab),
        key=lambda w: (-counts[w], w),
    )
    for w in kept:
        vocab[w] = len(vocab)
    return Tokenizer(vocab=vocab, unk_id=0, article_labels=articles.labels, min_freq=min_freq)


@dataclass(frozen=True)
class Segment:
    """Provenance of a contiguous token span: where it came from and its source text."""

    case_id: str
    kind: SegmentKind
    start: int
    end: int
    text: str

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "kind": self.kind.value,
            "span": [self.start, self.end],
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        return cls(
            case_id=str(d["case_id"]),
            kind=SegmentKind(d["kind"]),
            start=int(d["span"][0]),
            end=int(d["span"][1]),
            text=str(d["text"]),
        )


@dataclass(frozen=True)
class ConditioningBundle:
    """Token sequence realizing one conditioning variant for one case.

    Segments tile the token sequence: contiguous, non-overlapping spans in
    order. Segments truncated away entirely keep an empty span so the full
    layout (for re-tokenization by external scorers) survives export.
    """

    case_id: str
    variant: Variant
    tokens: tuple[int, ...]
    segments: tuple[Segment, ...]

    def check_tiling(self) -> None:
        pos = 0
        for seg in self.segments:
            if seg.start != pos or seg.end < seg.start:
                raise BundleError(
                    f"bundle {self.case_id}/{self.variant.value}: segments do not tile"
                )
            pos = seg.end
        if pos != len(self.tokens):
            raise BundleError(
                f"bundle {self.case_id}/{self.variant.value}: segments do not cover tokens"
            )

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "variant": self.variant.value,
            "tokens": list(self.tokens),
            "text_segments": [s.to_dict() for s in self.segments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditioningBundle":
        return cls(
            case_id=str(d["case_id"]),
            variant=Variant(d["variant"]),
            tokens=tuple(int(t) for t in d["tokens"]),
            segments=tuple(Segment.from_dict(s) for s in d["text_segments"]),
        )


def serialize_outcome(outcome: Sequence[int], tok: Tokenizer) -> tuple[list[int], str]:
    """Outcome marker tokens for a precedent: delimiter, then one marker per violation."""
    ids = [tok.outcome_id]
    words = [OUTCOME_TOKEN]
    for label, bit in zip(tok.article_labels, outcome):
        if bit:
            ids.append(tok.violation_id(label))
            words.append(violation_token(label))
    return ids, " ".join(words)


def build_facts_bundle(case: Case, tok: Tokenizer, budget: int = FACTS_BUDGET) -> ConditioningBundle:
    """Facts-only bundle: first min(budget, n) tokens of the case facts."""
    if not case.facts:
        raise BundleError(f"case {case.id}: empty facts")
    ids = tok.tokenize(case.facts)[:budget]
    seg = Segment(case.id, SegmentKind.FACTS, 0, len(ids), case.facts)
    return ConditioningBundle(case.id, Variant.FACTS, tuple(ids), (seg,))


def _material(case: Case, variant: Variant) -> tuple[str, SegmentKind]:
    if variant is Variant.HALSBURY:
        return case.arguments, SegmentKind.ARGUMENTS
    return case.facts, SegmentKind.FACTS


def build_precedent_segment(
    precedents: Sequence[Case],
    variant: Variant,
    tok: Tokenizer,
    budget: int = PRECEDENT_BUDGET,
) -> tuple[list[int], list[Segment]]:
    """Concatenated (outcome serialization + material) per precedent, citation order.

    Material is arguments for the halsbury variant, facts for goodhart.
    Precedents with no material text are skipped (with a warning); the
    concatenation is hard-truncated at the budget, so late precedents may
    be cut mid-segment or lost entirely (their segments keep empty spans).
    """
    if variant not in (Variant.HALSBURY, Variant.GOODHART):
        raise ValueError(f"precedent segment undefined for variant {variant!r}")
    if not precedents:
        raise BundleError("no precedents given")

    usable = []
    for prec in precedents:
        text, kind = _material(prec, variant)
        if not text:
            log.debug(
                "precedent %s has no %s text; skipped for %s bundle",
                prec.id, kind.value, variant.value,
            )
            continue
        usable.append((prec, text, kind))
    if not usable:
        side = "argument" if variant is Variant.HALSBURY else "fact"
        raise BundleError(f"no {side} material among precedents")

    tokens: list[int] = []
    segments: list[Segment] = []
    pos = 0
    for prec, text, kind in usable:
        marker_ids, marker_text = serialize_outcome(prec.outcome, tok)
        for ids, seg_kind, seg_text in (
            (marker_ids, SegmentKind.OUTCOME, marker_text),
            (tok.tokenize(text), kind, text),
        ):
            keep = ids[: max(0, budget - pos)]
            tokens.extend(keep)
            segments.append(Segment(prec.id, seg_kind, pos, pos + len(keep), seg_text))
            pos += len(keep)
    return tokens, segments


def build_bundle(
    case: Case,
    precedents: Sequence[Case],
    variant: Variant,
    tok: Tokenizer,
    facts_budget: int = FACTS_BUDGET,
    precedent_budget: int = PRECEDENT_BUDGET,
) -> ConditioningBundle:
    """Assemble one conditioning bundle: [precedent segment] + [current facts]."""
    if variant is Variant.FACTS:
        return build_facts_bundle(case, tok, facts_budget)
    if not case.facts:
        raise BundleError(f"case {case.id}: empty facts")

    prec_tokens, prec_segments = build_precedent_segment(
        precedents, variant, tok, precedent_budget
    )
    facts_ids = tok.tokenize(case.facts)[:facts_budget]
    offset = len(prec_tokens)
    segments = list(prec_segments)
    segments.append(
        Segment(case.id, SegmentKind.FACTS, offset, offset + len(facts_ids), case.facts)
    )
    bundle = ConditioningBundle(
        case_id=case.id,
        variant=variant,
        tokens=tuple(prec_tokens) + tuple(facts_ids),
        segments=tuple(segments),
    )
    bundle.check_tiling()
    return bundle


def build_corpus_bundles(
    cases: Sequence[Case],
    index: dict[str, Case],
    graph: CitationGraph,
    variant: Variant,
    tok: Tokenizer,
    facts_budget: int = FACTS_BUDGET,
    precedent_budget: int = PRECEDENT_BUDGET,
) -> tuple[list[ConditioningBundle], list[str]]:
    """Bundle every case, resolving precedents through the graph.

    Returns (bundles, ids of cases skipped because the variant had no
    usable precedent material). Skips keep the pipeline alive; callers
    aligning variants should drop skipped ids everywhere.
    """
    bundles: list[ConditioningBundle] = []
    skipped: list[str] = []
    for case in cases:
        precedents = [index[pid] for pid in graph.precedent_ids(case.id)]
        try:
            bundles.append(
                build_bundle(case, precedents, variant, tok, facts_budget, precedent_budget)
            )
        except BundleError as e:
            log.debug("skipping %s for %s: %s", case.id, variant.value, e)
            skipped.append(case.id)
    if skipped:
        log.warning("%s: %d case(s) skipped for missing material (first: %s)",
                    variant.value, len(skipped), skipped[0])
    return bundles, skipped


def write_bundles_jsonl(bundles: Iterable[ConditioningBundle], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for b in bundles:
            f.write(json.dumps(b.to_dict(), sort_keys=True) + "\n")


def read_bundles_jsonl(path: str | Path) -> list[ConditioningBundle]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(ConditioningBundle.from_dict(json.loads(line)))
    return out
