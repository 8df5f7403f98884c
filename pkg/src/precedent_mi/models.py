"""Probabilistic multi-label outcome models and score-table handling.

The built-in model is one independent binary logistic regression per
article over hashed token n-gram counts, trained by full-batch gradient
descent with a fixed learning rate, keeping the epoch with the lowest
validation cross-entropy. Externally produced probabilities enter through
the shared score-file format and are validated before use.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .bundles import ConditioningBundle, Variant

log = logging.getLogger(__name__)

PROB_EPS = 1e-7


class ScoreValidationError(Exception):
    """A score file or table violates the format/coverage contract."""


class TrainingDivergedError(Exception):
    """Training produced a non-finite loss (learning rate too high)."""


@dataclass(frozen=True)
class FeatureSpec:
    """Token n-gram orders and the hashed feature dimension."""

    ngram_orders: tuple[int, ...] = (1, 2)
    hash_dim: int = 2**20


@lru_cache(maxsize=1 << 20)
def _hash_gram(gram: tuple[int, ...], dim: int) -> int:
    digest = hashlib.blake2b(repr(gram).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def featurize(bundle: ConditioningBundle, spec: FeatureSpec) -> dict[int, float]:
    """Hashed n-gram counts of the bundle's token sequence."""
    feats: dict[int, float] = {}
    toks = bundle.tokens
    for order in spec.ngram_orders:
        for i in range(len(toks) - order + 1):
            idx = _hash_gram(toks[i:i + order], spec.hash_dim)
            feats[idx] = feats.get(idx, 0.0) + 1.0
    return feats


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    epochs: int = 300
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class OutcomeModel:
    """Per-article logistic weights over a compacted hashed feature space.

    feature_index maps column j to its hashed id; hashed ids absent from
    the index carry zero weight. All fields are frozen after training.
    """

    articles: tuple[str, ...]
    feature_spec: FeatureSpec
    feature_index: np.ndarray          # (n_feat,) hashed ids, sorted
    weights: np.ndarray                # (K, n_feat)
    bias: np.ndarray                   # (K,)
    train_config: TrainConfig
    best_epoch: int
    train_loss_history: tuple[float, ...] = ()   # train CE before each update
    _column: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._column:
            self._column = {int(h): j for j, h in enumerate(self.feature_index)}
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model weights must be finite")

    def predict_proba(self, bundle: ConditioningBundle) -> np.ndarray:
        """Clamped per-article violation probabilities for one bundle."""
        logits = self.bias.copy()
        col = self._column
        for h, cnt in featurize(bundle, self.feature_spec).items():
            j = col.get(h)
            if j is not None:
                logits += self.weights[:, j] * cnt
        return np.clip(expit(logits), PROB_EPS, 1.0 - PROB_EPS)

    def save(self, path: str | Path) -> None:
        payload = {
            "articles": list(self.articles),
            "feature_spec": {
                "ngram_orders": list(self.feature_spec.ngram_orders),
                "hash_dim": self.feature_spec.hash_dim,
            },
            "feature_index": [int(h) for h in self.feature_index],
            "weights": [[float(w) for w in row] for row in self.weights],
            "bias": [float(b) for b in self.bias],
            "train_config": {
                "learning_rate": self.train_config.learning_rate,
                "epochs": self.train_config.epochs,
                "seed": self.train_config.seed,
            },
            "best_epoch": self.best_epoch,
            "train_loss_history": [float(x) for x in self.train_loss_history],
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "OutcomeModel":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            articles=tuple(d["articles"]),
            feature_spec=FeatureSpec(
                ngram_orders=tuple(d["feature_spec"]["ngram_orders"]),
                hash_dim=int(d["feature_spec"]["hash_dim"]),
            ),
            feature_index=np.asarray(d["feature_index"], dtype=np.int64),
            weights=np.asarray(d["weights"], dtype=np.float64),
            bias=np.asarray(d["bias"], dtype=np.float64),
            train_config=TrainConfig(**d["train_config"]),
            best_epoch=int(d["best_epoch"]),
            train_loss_history=tuple(d.get("train_loss_history", ())),
        )


def _design_matrix(
    bundles: Sequence[ConditioningBundle],
    spec: FeatureSpec,
    column: Mapping[int, int],
    n_cols: int,
) -> sp.csr_matrix:
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for b in bundles:
        for h, cnt in featurize(b, spec).items():
            j = column.get(h)
            if j is not None:
                indices.append(j)
                data.append(cnt)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(bundles), n_cols),
    )


def _cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum(axis=1).mean())


def train(
    train_bundles: Sequence[ConditioningBundle],
    train_outcomes: Sequence[Sequence[int]],
    articles: Sequence[str],
    config: TrainConfig = TrainConfig(),
    spec: FeatureSpec = FeatureSpec(),
    val_bundles: Sequence[ConditioningBundle] | None = None,
    val_outcomes: Sequence[Sequence[int]] | None = None,
) -> OutcomeModel:
    """Fit K independent logistic models by full-batch gradient descent.

    Weights start at zero, so zero epochs yield the uniform 0.5 predictor.
    When a validation set is given, the returned weights are those of the
    epoch with the lowest validation cross-entropy (epoch 0 = untrained).
    """
    if not train_bundles:
        raise ValueError("need at least one training example")
    if len(train_bundles) != len(train_outcomes):
        raise ValueError("bundles and outcomes must align")

    K = len(articles)
    y = np.asarray(train_outcomes, dtype=np.float64)
    if y.shape != (len(train_bundles), K):
        raise ValueError(f"outcomes must be (n, {K}), got {y.shape}")

    hashed: set[int] = set()
    for b in train_bundles:
        hashed.update(featurize(b, spec).keys())
    feature_index = np.asarray(sorted(hashed), dtype=np.int64)
    column = {int(h): j for j, h in enumerate(feature_index)}
    n_feat = len(feature_index)

    X = _design_matrix(train_bundles, spec, column, n_feat)
    n = X.shape[0]

    use_val = val_bundles is not None and val_outcomes is not None and len(val_bundles) > 0
    if use_val:
        Xv = _design_matrix(val_bundles, spec, column, n_feat)
        yv = np.asarray(val_outcomes, dtype=np.float64)

    W = np.zeros((K, n_feat))
    b = np.zeros(K)
    best_epoch = 0
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    if use_val:
        best = (_cross_entropy(expit(Xv @ W.T + b), yv), W.copy(), b.copy())

    lr = config.learning_rate
    history: list[float] = []
    for epoch in range(1, config.epochs + 1):
        P = expit(X @ W.T + b)            # (n, K)
        history.append(_cross_entropy(P, y))
        R = P - y
        grad_w = (X.T @ R).T / n           # (K, n_feat)
        grad_b = R.mean(axis=0)
        with np.errstate(over="ignore", invalid="ignore"):
            W -= lr * grad_w
            b -= lr * grad_b
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise TrainingDivergedError(
                f"non-finite parameters at epoch {epoch}; lower the learning rate"
            )
        if use_val:
            val_ce = _cross_entropy(expit(Xv @ W.T + b), yv)
            if not np.isfinite(val_ce):
                raise TrainingDivergedError(
                    f"non-finite validation loss at epoch {epoch}; lower the learning rate"
                )
            if val_ce < best[0]:
                best = (val_ce, W.copy(), b.copy())
                best_epoch = epoch

    if use_val:
        _, W, b = best
        log.info("selected epoch %d (validation CE %.4f)", best_epoch, best[0])
    else:
        best_epoch = config.epochs

    return OutcomeModel(
        articles=tuple(articles),
        feature_spec=spec,
        feature_index=feature_index,
        weights=W,
        bias=b,
        train_config=config,
        best_epoch=best_epoch,
        train_loss_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# Score tables
# ---------------------------------------------------------------------------

@dataclass
class ScoreTable:
    """Per-(case, variant) probability vectors, clamped away from {0, 1}."""

    n_articles: int
    rows: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def add(self, case_id: str, variant: str | Variant, probs: Sequence[float]) -> None:
        key = (case_id, Variant(variant).value)
        if key in self.rows:
            raise ScoreValidationError(f"duplicate score row for {key}")
        arr = np.asarray(probs, dtype=np.float64)
        if arr.shape != (self.n_articles,):
            raise ScoreValidationError(
                f"row {key}: expected {self.n_articles} probabilities, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ScoreValidationError(f"row {key}: probabilities outside [0, 1]")
        self.rows[key] = np.clip(arr, PROB_EPS, 1.0 - PROB_EPS)

    def get(self, case_id: str, variant: str | Variant) -> np.ndarray:
        return self.rows[(case_id, Variant(variant).value)]

    def __contains__(self, key: tuple[str, str]) -> bool:
        return (key[0], Variant(key[1]).value) in self.rows

    def merge(self, other: "ScoreTable") -> None:
        if other.n_articles != self.n_articles:
            raise ScoreValidationError("cannot merge tables with different article counts")
        for key, probs in other.rows.items():
            if key in self.rows:
                raise ScoreValidationError(f"duplicate score row for {key}")
            self.rows[key] = probs

    def check_coverage(self, case_ids: Iterable[str], variants: Iterable[str | Variant]) -> None:
        missing = [
            (cid, Variant(v).value)
            for v in variants
            for cid in case_ids
            if (cid, Variant(v).value) not in self.rows
        ]
        if missing:
            shown = ", ".join(f"{c}/{v}" for c, v in missing[:10])
            more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
            raise ScoreValidationError(f"missing score rows: {shown}{more}")

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for (cid, variant), probs in self.rows.items():
                rec = {"case_id": cid, "variant": variant, "probs": [float(p) for p in probs]}
                f.write(json.dumps(rec, sort_keys=True) + "\n")


def score_bundles(model: OutcomeModel, bundles: Sequence[ConditioningBundle]) -> ScoreTable:
    """Batch prediction over many bundles (one matrix pass)."""
    X = _design_matrix(bundles, model.feature_spec, model._column, len(model.feature_index))
    P = expit(X @ model.weights.T + model.bias)
    np.clip(P, PROB_EPS, 1.0 - PROB_EPS, out=P)
    table = ScoreTable(n_articles=len(model.articles))
    rows = table.rows
    for b, p in zip(bundles, P):
        key = (b.case_id, b.variant.value)
        if key in rows:
            raise ScoreValidationError(f"duplicate score row for {key}")
        rows[key] = p
    return table


def load_external_scores(
    path: str | Path,
    n_articles: int,
    expected_cases: Iterable[str] | None = None,
    expected_variants: Iterable[str | Variant] | None = None,
) -> ScoreTable:
    """Read and validate a score file (JSONL: case_id, variant, probs).

    Rejects malformed rows with the offending line number, and — when an
    expected case set is given — any coverage gap, naming the missing ids.
    """
    table = ScoreTable(n_articles=n_articles)
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ScoreValidationError(f"{path}: line {lineno}: invalid JSON ({e})") from e
            try:
                table.add(str(rec["case_id"]), rec["variant"], rec["probs"])
            except (KeyError, ValueError, ScoreValidationError) as e:
                raise ScoreValidationError(f"{path}: line {lineno}: {e}") from e
    if expected_cases is not None:
        variants = list(expected_variants) if expected_variants is not None else list(Variant)
        table.check_coverage(list(expected_cases), variants)
    return table
