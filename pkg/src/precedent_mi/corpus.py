"""Corpus ingestion: case parsing, citation resolution, sub-corpus filtering.

Input records arrive either raw ({"id", "body", "outcome", "citations", ...},
with facts/arguments extracted from the body by heading patterns) or
pre-split ({"id", "facts", "arguments", ...}). Citations are resolved
against the full corpus by normalized string equality and de-duplicated;
the analysis sub-corpus keeps only cases with at least one resolved
precedent.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

DEFAULT_FACTS_PATTERNS = ("THE FACTS",)
DEFAULT_ARGUMENTS_PATTERNS = ("THE LAW",)


class CorpusError(Exception):
    """Fatal corpus-level problem (e.g. empty sub-corpus)."""


class CaseParseError(CorpusError):
    """A single document could not be admitted; message names the reason."""


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(frozen=True)
class ArticleSet:
    """Fixed, ordered set of article labels defining bit-vector indexing."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.labels) < 1:
            raise ValueError("article set must contain at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("article labels must be unique")

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def to_bits(self, violated: Iterable[str]) -> tuple[int, ...]:
        """Bit-vector with 1 exactly at the listed labels' indices.

        Raises CaseParseError naming any label not in the set.
        """
        bits = [0] * len(self.labels)
        for label in violated:
            if label not in self.labels:
                raise CaseParseError(f"unknown article label: {label!r}")
            bits[self.index(label)] = 1
        return tuple(bits)

    def from_bits(self, bits: Sequence[int]) -> list[str]:
        return [lab for lab, bit in zip(self.labels, bits) if bit]

    @classmethod
    def from_file(cls, path: str | Path) -> "ArticleSet":
        labels = [
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(tuple(labels))


@dataclass(frozen=True)
class Case:
    """One court document: facts, arguments, outcome bits, raw citations."""

    id: str
    facts: str
    arguments: str
    outcome: tuple[int, ...]
    cited_ids: tuple[str, ...]
    split: Split

    def __post_init__(self) -> None:
        # Canonicalize: the duplicate-free invariant is enforced by
        # construction, collapsing repeats on their normalized form.
        keys = [normalize_citation(c) for c in self.cited_ids]
        if len(set(keys)) != len(keys):
            object.__setattr__(self, "cited_ids", _dedupe_citations(self.cited_ids))


@dataclass(frozen=True)
class CitationGraph:
    """Resolved precedent lists per case, plus out-of-corpus citation counts."""

    edges: dict[str, tuple[str, ...]]
    unresolved: dict[str, int]

    def precedent_ids(self, case_id: str) -> tuple[str, ...]:
        return self.edges.get(case_id, ())

    def validate(self, case_ids: Iterable[str]) -> None:
        """Check every edge targets a known id, no self-citation, no repeats."""
        known = set(case_ids)
        for cid, targets in self.edges.items():
            if len(set(targets)) != len(targets):
                raise CorpusError(f"case {cid}: duplicate resolved precedent")
            for t in targets:
                if t not in known:
                    raise CorpusError(f"case {cid}: edge to unknown id {t!r}")
                if t == cid:
                    raise CorpusError(f"case {cid}: self-citation in edges")

    def to_dict(self) -> dict:
        return {
            "edges": {k: list(v) for k, v in self.edges.items()},
            "unresolved": dict(self.unresolved),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CitationGraph":
        return cls(
            edges={k: tuple(v) for k, v in d["edges"].items()},
            unresolved={k: int(v) for k, v in d["unresolved"].items()},
        )


def normalize_citation(s: str) -> str:
    """Trim, case-fold and collapse internal whitespace."""
    return re.sub(r"\s+", " ", s.strip()).casefold()


def _dedupe_citations(raw: Iterable[str]) -> tuple[str, ...]:
    """Drop empties and collapse duplicates (by normalized key), keeping first occurrence order."""
    seen: set[str] = set()
    out: list[str] = []
    for c in raw:
        key = normalize_citation(c)
        if not key or key in seen:
            continue
        seen.add(key)
        out.append(c.strip())
    return tuple(out)


def _compile_heading(pattern: str) -> re.Pattern[str]:
    # Heading = a whole line consisting of the pattern (optional trailing ':').
    return re.compile(rf"^[ \t]*(?:{pattern})[ \t]*:?[ \t]*$", re.IGNORECASE | re.MULTILINE)


def split_sections(
    body: str,
    facts_patterns: Sequence[str] = DEFAULT_FACTS_PATTERNS,
    arguments_patterns: Sequence[str] = DEFAULT_ARGUMENTS_PATTERNS,
) -> tuple[str, str]:
    """Extract (facts, arguments) as disjoint spans of the body.

    Facts run from the end of the first matching facts heading to the start
    of the first arguments heading after it (or end of body); arguments run
    from the end of that heading to the end of the body. Patterns are tried
    in order; the first one that matches anywhere wins.
    """
    facts_m = None
    for pat in facts_patterns:
        facts_m = _compile_heading(pat).search(body)
        if facts_m:
            break
    if facts_m is None:
        raise CaseParseError("missing facts heading")

    args_m = None
    for pat in arguments_patterns:
        args_m = _compile_heading(pat).search(body, facts_m.end())
        if args_m:
            break

    if args_m is None:
        facts = body[facts_m.end():].strip()
        arguments = ""
    else:
        facts = body[facts_m.end():args_m.start()].strip()
        arguments = body[args_m.end():].strip()
    if not facts:
        raise CaseParseError("empty facts section")
    return facts, arguments


def parse_case(
    record: dict,
    articles: ArticleSet,
    facts_patterns: Sequence[str] = DEFAULT_FACTS_PATTERNS,
    arguments_patterns: Sequence[str] = DEFAULT_ARGUMENTS_PATTERNS,
) -> Case:
    """Turn one input record into a Case, or raise CaseParseError.

    Accepts the raw form (body text split by heading patterns) and the
    pre-split form (explicit facts/arguments fields).
    """
    if "id" not in record:
        raise CaseParseError("record has no id")
    cid = str(record["id"])

    if "body" in record:
        facts, arguments = split_sections(record["body"], facts_patterns, arguments_patterns)
    else:
        facts = str(record.get("facts", "")).strip()
        arguments = str(record.get("arguments", "")).strip()
        if not facts:
            raise CaseParseError(f"case {cid}: missing or empty facts")
    if not arguments:
        log.debug("case %s: no arguments section; unusable as precedent argument material", cid)

    outcome = articles.to_bits(record.get("outcome", ()))
    cited = _dedupe_citations(record.get("citations", ()))
    split = Split(record.get("split", "train"))
    return Case(id=cid, facts=facts, arguments=arguments, outcome=outcome,
                cited_ids=cited, split=split)


def parse_corpus(
    records: Iterable[dict],
    articles: ArticleSet,
    facts_patterns: Sequence[str] = DEFAULT_FACTS_PATTERNS,
    arguments_patterns: Sequence[str] = DEFAULT_ARGUMENTS_PATTERNS,
) -> tuple[list[Case], list[tuple[str, str]]]:
    """Parse all records; return (admitted cases, [(id, rejection reason)])."""
    cases: list[Case] = []
    rejected: list[tuple[str, str]] = []
    seen_ids: set[str] = set()
    n_without_arguments = 0
    for i, rec in enumerate(records):
        rid = str(rec.get("id", f"<record {i}>"))
        try:
            case = parse_case(rec, articles, facts_patterns, arguments_patterns)
        except CaseParseError as e:
            log.warning("rejected %s: %s", rid, e)
            rejected.append((rid, str(e)))
            continue
        if case.id in seen_ids:
            raise CorpusError(f"duplicate case id {case.id!r}")
        seen_ids.add(case.id)
        n_without_arguments += not case.arguments
        cases.append(case)
    if n_without_arguments:
        log.warning(
            "%d case(s) have no argument material; they cannot serve as "
            "precedent argument sources", n_without_arguments,
        )
    return cases, rejected


def resolve_citations(cases: Sequence[Case]) -> CitationGraph:
    """Resolve each case's citations against the corpus.

    A citation resolves when its normalized string equals a corpus id's
    normalized form. Per-case lists are de-duplicated preserving first
    occurrence order; self-citations are dropped. Unresolvable citations
    are counted, never fatal.
    """
    by_key: dict[str, str] = {}
    for c in cases:
        key = normalize_citation(c.id)
        if key in by_key:
            raise CorpusError(f"case ids {by_key[key]!r} and {c.id!r} collide after normalization")
        by_key[key] = c.id

    edges: dict[str, tuple[str, ...]] = {}
    unresolved: dict[str, int] = {}
    for c in cases:
        resolved: list[str] = []
        seen: set[str] = set()
        n_unresolved = 0
        for cit in c.cited_ids:
            key = normalize_citation(cit)
            if key in seen:
                continue
            seen.add(key)
            target = by_key.get(key)
            if target == c.id:
                continue
            if target is None:
                n_unresolved += 1
            else:
                resolved.append(target)
        edges[c.id] = tuple(resolved)
        unresolved[c.id] = n_unresolved
    return CitationGraph(edges=edges, unresolved=unresolved)


def filter_subcorpus(cases: Sequence[Case], graph: CitationGraph) -> list[Case]:
    """Keep exactly the cases with at least one resolved precedent."""
    kept = [c for c in cases if graph.precedent_ids(c.id)]
    if not kept:
        raise CorpusError("sub-corpus is empty: no case has a resolved citation")
    return kept


@dataclass
class CorpusStats:
    n_documents: int
    per_split: dict[str, int]
    in_corpus_links: int
    in_corpus_types: int
    out_corpus_links: int
    out_corpus_types: int
    article_frequencies: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "per_split": dict(self.per_split),
            "in_corpus_links": self.in_corpus_links,
            "in_corpus_types": self.in_corpus_types,
            "out_corpus_links": self.out_corpus_links,
            "out_corpus_types": self.out_corpus_types,
            "article_frequencies": dict(self.article_frequencies),
        }


def corpus_stats(
    cases: Sequence[Case],
    graph: CitationGraph,
    articles: ArticleSet | None = None,
) -> CorpusStats:
    """Document counts per split, citation link/type counts, outcome frequencies.

    Link counts are tokens (one per citing-cited pair after per-case
    de-duplication); type counts are distinct cited documents.
    """
    per_split = Counter(c.split.value for c in cases)
    in_links = 0
    in_types: set[str] = set()
    out_links = 0
    out_types: set[str] = set()
    for c in cases:
        resolved = graph.precedent_ids(c.id)
        in_links += len(resolved)
        in_types.update(resolved)
        out_links += graph.unresolved.get(c.id, 0)
        resolved_keys = {normalize_citation(r) for r in resolved}
        self_key = normalize_citation(c.id)
        for cit in c.cited_ids:
            key = normalize_citation(cit)
            if key not in resolved_keys and key != self_key:
                out_types.add(key)

    freqs: dict[str, int] = {}
    if articles is not None:
        totals = [0] * len(articles)
        for c in cases:
            for k, bit in enumerate(c.outcome):
                totals[k] += bit
        freqs = dict(zip(articles.labels, totals))

    return CorpusStats(
        n_documents=len(cases),
        per_split={s.value: per_split.get(s.value, 0) for s in Split},
        in_corpus_links=in_links,
        in_corpus_types=len(in_types),
        out_corpus_links=out_links,
        out_corpus_types=len(out_types),
        article_frequencies=freqs,
    )


# ---------------------------------------------------------------------------
# JSONL input/output
# ---------------------------------------------------------------------------

def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}: line {i}: invalid JSON ({e})") from e
    return records


def case_to_record(case: Case, articles: ArticleSet) -> dict:
    return {
        "id": case.id,
        "facts": case.facts,
        "arguments": case.arguments,
        "outcome": articles.from_bits(case.outcome),
        "citations": list(case.cited_ids),
        "split": case.split.value,
    }


def write_cases_jsonl(cases: Sequence[Case], articles: ArticleSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for c in cases:
            f.write(json.dumps(case_to_record(c, articles), sort_keys=True) + "\n")


def load_cases_jsonl(path: str | Path, articles: ArticleSet) -> list[Case]:
    cases, rejected = parse_corpus(read_jsonl(path), articles)
    if rejected:
        raise CorpusError(
            f"{path}: {len(rejected)} record(s) rejected, first: {rejected[0]}"
        )
    return cases


def case_index(cases: Sequence[Case]) -> dict[str, Case]:
    return {c.id: c for c in cases}
