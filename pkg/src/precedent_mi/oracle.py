"""Synthetic citation corpora with exactly computable conditional entropies.

Generative model (all channels independent per token/bit, so every true
conditional stays inside the factorized-logistic family the built-in
classifier fits):

  facts        L tokens, multinomial-uniform over a small alphabet
  outcome      per article k: Bernoulli(sigmoid(w_k . counts(facts) + b_k))
  precedents   m per case; for each precedent and article k:
                 outcome bit   = case outcome bit flipped w.p. marker_flip
                 argument text = n_e tokens, each reflecting the case
                                 outcome bit with flip prob arg_flip
                 facts text    = n_e tokens likewise with flip prob fact_flip

info_asymmetry steers which side is sharper: 1.0 makes precedent
arguments informative and precedent facts pure noise, 0.0 the reverse.
Ground-truth H(O|F), H(O|G,F), H(O|H,F) come from exact enumeration over
facts count vectors and binomial evidence grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np
from scipy.special import expit
from scipy.stats import binom

from .corpus import Case, CitationGraph, Split, resolve_citations

ENUMERATION_LIMIT = 10_000_000


class InfeasibleSpecError(Exception):
    """The spec's discrete spaces exceed the exact-enumeration bound."""


@dataclass(frozen=True)
class SyntheticSpec:
    """Fully specified generative model for a synthetic citation corpus."""

    vocab_size: int = 4
    doc_length: int = 4
    n_articles: int = 2
    outcome_weights: tuple[tuple[float, ...], ...] = (
        (0.8, -0.6, 0.3, -0.2),
        (-0.5, 0.7, -0.4, 0.6),
    )
    outcome_bias: tuple[float, ...] = (-0.2, 0.1)
    precedents_per_case: int = 2
    evidence_tokens_per_article: int = 2
    marker_flip: float = 0.3
    info_asymmetry: float = 0.5
    evidence_strength: float = 0.35
    train_frac: float = 0.8
    val_frac: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.vocab_size < 1 or self.doc_length < 1 or self.n_articles < 1:
            raise ValueError("vocab_size, doc_length and n_articles must be >= 1")
        if self.precedents_per_case < 1:
            raise ValueError("precedents_per_case must be >= 1")
        if self.evidence_tokens_per_article < 1:
            raise ValueError("evidence_tokens_per_article must be >= 1")
        W = np.asarray(self.outcome_weights, dtype=np.float64)
        if W.shape != (self.n_articles, self.vocab_size):
            raise ValueError(
                f"outcome_weights must be ({self.n_articles}, {self.vocab_size}), got {W.shape}"
            )
        if len(self.outcome_bias) != self.n_articles:
            raise ValueError("outcome_bias length must equal n_articles")
        if not 0.0 < self.marker_flip < 1.0:
            raise ValueError("marker_flip must lie in (0, 1)")
        if not 0.0 <= self.info_asymmetry <= 1.0:
            raise ValueError("info_asymmetry must lie in [0, 1]")
        if not 0.0 <= self.evidence_strength <= 0.48:
            raise ValueError("evidence_strength must lie in [0, 0.48]")
        if not (0 < self.train_frac < 1 and 0 <= self.val_frac < 1
                and self.train_frac + self.val_frac < 1):
            raise ValueError("split fractions must leave room for a test split")

    @property
    def arg_flip(self) -> float:
        return 0.5 - self.evidence_strength * self.info_asymmetry

    @property
    def fact_flip(self) -> float:
        return 0.5 - self.evidence_strength * (1.0 - self.info_asymmetry)

    @property
    def article_labels(self) -> tuple[str, ...]:
        return tuple(str(k) for k in range(self.n_articles))

    def check_feasible(self) -> None:
        if self.vocab_size ** self.doc_length > ENUMERATION_LIMIT:
            raise InfeasibleSpecError(
                f"{self.vocab_size}^{self.doc_length} facts strings exceed the "
                f"enumeration bound {ENUMERATION_LIMIT}"
            )

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "doc_length": self.doc_length,
            "n_articles": self.n_articles,
            "outcome_weights": [list(r) for r in self.outcome_weights],
            "outcome_bias": list(self.outcome_bias),
            "precedents_per_case": self.precedents_per_case,
            "evidence_tokens_per_article": self.evidence_tokens_per_article,
            "marker_flip": self.marker_flip,
            "info_asymmetry": self.info_asymmetry,
            "evidence_strength": self.evidence_strength,
            "train_frac": self.train_frac,
            "val_frac": self.val_frac,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        d = dict(d)
        if "outcome_weights" in d:
            d["outcome_weights"] = tuple(tuple(float(x) for x in r) for r in d["outcome_weights"])
        if "outcome_bias" in d:
            d["outcome_bias"] = tuple(float(x) for x in d["outcome_bias"])
        return cls(**d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2),
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SyntheticSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class GroundTruth:
    """Exact conditional entropies and mutual informations, in nats."""

    h_facts: float
    h_goodhart: float
    h_halsbury: float
    mi_goodhart: float
    mi_halsbury: float

    def to_dict(self) -> dict:
        return {
            "h_facts": self.h_facts,
            "h_goodhart": self.h_goodhart,
            "h_halsbury": self.h_halsbury,
            "mi_goodhart": self.mi_goodhart,
            "mi_halsbury": self.mi_halsbury,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2),
                              encoding="utf-8")


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

def _facts_count_vectors(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """All token-count vectors of facts strings with their probabilities.

    Collapsing the |vocab|^L string space onto count vectors (the outcome
    model only sees counts) is the memoization that keeps enumeration fast.
    """
    V, L = spec.vocab_size, spec.doc_length
    vectors = []
    probs = []
    log_uniform = -L * math.log(V)
    for combo in combinations_with_replacement(range(V), L):
        counts = np.bincount(combo, minlength=V)
        coeff = math.factorial(L)
        for c in counts:
            coeff //= math.factorial(int(c))
        vectors.append(counts)
        probs.append(coeff * math.exp(log_uniform))
    return np.asarray(vectors, dtype=np.float64), np.asarray(probs)


def _evidence_grid(flip: float, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positive-count pmfs under bit=0/bit=1 and the count's log-likelihood ratio."""
    ts = np.arange(n + 1)
    pmf0 = binom.pmf(ts, n, flip)
    pmf1 = binom.pmf(ts, n, 1.0 - flip)
    llr = ts * math.log((1.0 - flip) / flip) + (n - ts) * math.log(flip / (1.0 - flip))
    return pmf0, pmf1, llr


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _conditioned_entropy(
    logits: np.ndarray, pf: np.ndarray, spec: SyntheticSpec, text_flip: float
) -> float:
    """H(O | markers, evidence text, F) for one evidence-noise level, exactly.

    The posterior log-odds of article k are the prior facts logit plus the
    log-likelihood ratio of the observed marker bits and evidence tokens,
    whose counts are binomial given the outcome bit.
    """
    m = spec.precedents_per_case
    n_text = m * spec.evidence_tokens_per_article
    pm0, pm1, llr_m = _evidence_grid(spec.marker_flip, m)
    pt0, pt1, llr_t = _evidence_grid(text_flip, n_text)
    llr = llr_m[:, None] + llr_t[None, :]                  # (m+1, n_text+1)
    joint1 = np.outer(pm1, pt1)
    joint0 = np.outer(pm0, pt0)

    total = 0.0
    for k in range(spec.n_articles):
        s = logits[:, k]
        post_logit = s[:, None, None] + llr[None, :, :]     # (n_cv, m+1, n_text+1)
        p1 = expit(s)
        loss1 = _softplus(-post_logit)                      # -ln sigma(x)
        loss0 = _softplus(post_logit)                       # -ln (1 - sigma(x))
        e1 = np.einsum("cmt,mt->c", loss1, joint1)
        e0 = np.einsum("cmt,mt->c", loss0, joint0)
        total += float(np.sum(pf * (p1 * e1 + (1.0 - p1) * e0)))
    return total


def exact_entropies(spec: SyntheticSpec) -> GroundTruth:
    """Ground-truth entropies by exact summation over the joint space."""
    spec.check_feasible()
    counts, pf = _facts_count_vectors(spec)
    W = np.asarray(spec.outcome_weights)
    b = np.asarray(spec.outcome_bias)
    logits = counts @ W.T + b                              # (n_cv, K)

    p1 = expit(logits)
    h_facts = float(np.sum(pf[:, None] * (p1 * _softplus(-logits)
                                          + (1.0 - p1) * _softplus(logits))))

    h_halsbury = _conditioned_entropy(logits, pf, spec, spec.arg_flip)
    h_goodhart = _conditioned_entropy(logits, pf, spec, spec.fact_flip)

    def _mi(h_cond: float) -> float:
        mi = h_facts - h_cond
        if mi < -1e-9:
            raise AssertionError(f"exact MI came out negative: {mi}")
        return max(mi, 0.0)

    return GroundTruth(
        h_facts=h_facts,
        h_goodhart=h_goodhart,
        h_halsbury=h_halsbury,
        mi_goodhart=_mi(h_goodhart),
        mi_halsbury=_mi(h_halsbury),
    )


# ---------------------------------------------------------------------------
# Corpus generation
# ---------------------------------------------------------------------------

def _block_texts(prefix_pos: str, prefix_neg: str, n: int) -> list[str]:
    """Texts for 0..n positive evidence tokens (remainder negative)."""
    return [" ".join([prefix_pos] * t + [prefix_neg] * (n - t)) for t in range(n + 1)]


def generate(spec: SyntheticSpec, n_cases: int) -> tuple[list[Case], CitationGraph]:
    """Sample a corpus of n_cases citing cases plus their precedents.

    Case order is [case, its precedents, next case, ...]; splits are
    assigned by position (cases are i.i.d.). Precedents cite nothing, so
    sub-corpus filtering keeps exactly the citing cases. Deterministic
    given spec.seed.
    """
    spec.check_feasible()
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    rng = np.random.default_rng(spec.seed)
    V, L, K = spec.vocab_size, spec.doc_length, spec.n_articles
    m, n_e = spec.precedents_per_case, spec.evidence_tokens_per_article
    W = np.asarray(spec.outcome_weights)
    b = np.asarray(spec.outcome_bias)

    counts = rng.multinomial(L, np.full(V, 1.0 / V), size=n_cases)
    outcome = (rng.random((n_cases, K)) < expit(counts @ W.T + b)).astype(np.int8)

    marker_flips = rng.random((n_cases, m, K)) < spec.marker_flip
    prec_outcome = np.where(marker_flips, 1 - outcome[:, None, :], outcome[:, None, :])

    p_arg = np.where(outcome == 1, 1.0 - spec.arg_flip, spec.arg_flip)
    p_fact = np.where(outcome == 1, 1.0 - spec.fact_flip, spec.fact_flip)
    arg_pos = rng.binomial(n_e, np.broadcast_to(p_arg[:, None, :], (n_cases, m, K)))
    fact_pos = rng.binomial(n_e, np.broadcast_to(p_fact[:, None, :], (n_cases, m, K)))

    facts_words = [f"f{v}" for v in range(V)]
    arg_blocks = [_block_texts(f"ea{k}p", f"ea{k}n", n_e) for k in range(K)]
    fact_blocks = [_block_texts(f"ef{k}p", f"ef{k}n", n_e) for k in range(K)]

    n_train = int(round(n_cases * spec.train_frac))
    n_val = int(round(n_cases * spec.val_frac))

    width = max(7, len(str(n_cases)))
    cases: list[Case] = []
    for i in range(n_cases):
        if i < n_train:
            split = Split.TRAIN
        elif i < n_train + n_val:
            split = Split.VALIDATION
        else:
            split = Split.TEST
        cid = f"case{i:0{width}d}"
        facts_text = " ".join(
            " ".join([facts_words[v]] * int(c)) for v, c in enumerate(counts[i]) if c
        )
        prec_ids = tuple(f"{cid}-p{j}" for j in range(m))
        cases.append(Case(
            id=cid,
            facts=facts_text,
            arguments="",
            outcome=tuple(int(x) for x in outcome[i]),
            cited_ids=prec_ids,
            split=split,
        ))
        for j, pid in enumerate(prec_ids):
            args_text = " ".join(arg_blocks[k][int(arg_pos[i, j, k])] for k in range(K))
            pfacts_text = " ".join(fact_blocks[k][int(fact_pos[i, j, k])] for k in range(K))
            cases.append(Case(
                id=pid,
                facts=pfacts_text,
                arguments=args_text,
                outcome=tuple(int(x) for x in prec_outcome[i, j]),
                cited_ids=(),
                split=split,
            ))

    return cases, resolve_citations(cases)
