"""Sample cross-entropies, mutual information and uncertainty coefficients.

Conditional entropies are estimated as mean per-case log-losses (nats,
natural log throughout) of a probabilistic outcome model; the mutual
information between outcome and a conditioning variant is the difference
between the facts-only cross-entropy and the conditioned one. Estimates
are empirical: a negative difference is reported (with a warning), never
clipped.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bundles import Variant
from .models import ScoreTable

log = logging.getLogger(__name__)


class EstimatorError(Exception):
    """Coverage gap or inconsistent inputs to an estimate."""


@dataclass(frozen=True)
class EntropyEstimate:
    """Mean log-loss of one variant's predictions over an evaluation set.

    loss_matrix[i, k] is the log-loss of case i on article k; totals are
    means over cases, and the per-article vector sums back to the total.
    """

    variant: Variant
    case_ids: tuple[str, ...]
    loss_matrix: np.ndarray        # (n, K)
    per_article: np.ndarray        # (K,)
    per_case_loss: np.ndarray      # (n,)
    total_nats: float

    @property
    def n_cases(self) -> int:
        return len(self.case_ids)

    @classmethod
    def from_loss_matrix(
        cls, variant: Variant | str, case_ids: Sequence[str], loss_matrix: np.ndarray
    ) -> "EntropyEstimate":
        L = np.asarray(loss_matrix, dtype=np.float64)
        if L.ndim != 2 or L.shape[0] != len(case_ids):
            raise EstimatorError(f"loss matrix shape {L.shape} does not match {len(case_ids)} cases")
        if L.shape[0] == 0:
            raise EstimatorError("empty evaluation set")
        if np.any(L < 0) or not np.all(np.isfinite(L)):
            raise EstimatorError("per-case losses must be finite and nonnegative")
        per_case = L.sum(axis=1)
        return cls(
            variant=Variant(variant),
            case_ids=tuple(case_ids),
            loss_matrix=L,
            per_article=L.mean(axis=0),
            per_case_loss=per_case,
            total_nats=float(per_case.mean()),
        )


def cross_entropy(
    scores: ScoreTable,
    gold: Mapping[str, Sequence[int]],
    variant: Variant | str,
    case_ids: Sequence[str],
) -> EntropyEstimate:
    """Mean log-loss of the variant's scores against gold outcomes, in nats.

    Every evaluation case must be covered by the score table; a gap is an
    error, not a silent drop.
    """
    variant = Variant(variant)
    missing = [cid for cid in case_ids if (cid, variant.value) not in scores.rows]
    if missing:
        shown = ", ".join(missing[:10])
        raise EstimatorError(
            f"scores missing for {len(missing)} case(s) under {variant.value}: {shown}"
        )
    probs = np.stack([scores.get(cid, variant) for cid in case_ids])
    y = np.asarray([gold[cid] for cid in case_ids], dtype=np.float64)
    if y.shape != probs.shape:
        raise EstimatorError(f"gold outcomes shape {y.shape} != scores shape {probs.shape}")
    loss = -(y * np.log(probs) + (1.0 - y) * np.log(1.0 - probs))
    return EntropyEstimate.from_loss_matrix(variant, case_ids, loss)


def mutual_information(base: EntropyEstimate, conditioned: EntropyEstimate) -> float:
    """Estimated MI: facts-only cross-entropy minus the conditioned one.

    May be negative (approximation error of the two bounds); negative
    values are surfaced with a warning, never floored.
    """
    if base.variant is not Variant.FACTS:
        raise EstimatorError(f"base estimate must be the facts variant, got {base.variant.value}")
    if set(base.case_ids) != set(conditioned.case_ids):
        raise EstimatorError("base and conditioned estimates cover different case sets")
    mi = base.total_nats - conditioned.total_nats
    if mi < 0:
        log.warning(
            "negative MI estimate for %s (%.4f nats): approximation error of the bounds",
            conditioned.variant.value, mi,
        )
    return mi


def uncertainty_coefficient(mi: float, base: EntropyEstimate) -> float:
    """Fraction of the facts-only outcome uncertainty removed by the conditioning."""
    if base.total_nats == 0:
        raise EstimatorError("outcome already fully determined by facts (zero base entropy)")
    return mi / base.total_nats


@dataclass(frozen=True)
class ArticleRow:
    """Per-article entropy/MI/U line of the detailed report."""

    article: str
    h_facts: float
    mi_goodhart: float
    u_goodhart: float
    mi_halsbury: float
    u_halsbury: float


def per_article_report(
    base: EntropyEstimate,
    cond_goodhart: EntropyEstimate,
    cond_halsbury: EntropyEstimate,
    articles: Sequence[str],
) -> list[ArticleRow]:
    """Per-article decomposition of the aggregate estimates.

    Per-article U divides by that article's facts-only entropy; articles
    with zero facts-only entropy get U = 0. Negative entries preserved.
    """
    for est in (cond_goodhart, cond_halsbury):
        if set(est.case_ids) != set(base.case_ids):
            raise EstimatorError("per-article report requires consistent case sets")
    rows = []
    for k, label in enumerate(articles):
        h_k = float(base.per_article[k])
        mi_g = h_k - float(cond_goodhart.per_article[k])
        mi_h = h_k - float(cond_halsbury.per_article[k])
        u_g = mi_g / h_k if h_k > 0 else 0.0
        u_h = mi_h / h_k if h_k > 0 else 0.0
        rows.append(ArticleRow(label, h_k, mi_g, u_g, mi_h, u_h))
    return rows


@dataclass
class EstimateReport:
    """Full comparison: aggregate entropies/MI/U, per-article table, p-values."""

    articles: tuple[str, ...]
    h_facts: EntropyEstimate
    h_goodhart: EntropyEstimate
    h_halsbury: EntropyEstimate
    mi_goodhart: float
    mi_halsbury: float
    u_goodhart: float
    u_halsbury: float
    article_rows: list[ArticleRow]
    significance: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def build_report(
    h_facts: EntropyEstimate,
    h_goodhart: EntropyEstimate,
    h_halsbury: EntropyEstimate,
    articles: Sequence[str],
    metadata: dict | None = None,
) -> EstimateReport:
    mi_g = mutual_information(h_facts, h_goodhart)
    mi_h = mutual_information(h_facts, h_halsbury)
    return EstimateReport(
        articles=tuple(articles),
        h_facts=h_facts,
        h_goodhart=h_goodhart,
        h_halsbury=h_halsbury,
        mi_goodhart=mi_g,
        mi_halsbury=mi_h,
        u_goodhart=uncertainty_coefficient(mi_g, h_facts),
        u_halsbury=uncertainty_coefficient(mi_h, h_facts),
        article_rows=per_article_report(h_facts, h_goodhart, h_halsbury, articles),
        metadata=dict(metadata or {}),
    )


# ---------------------------------------------------------------------------
# Rendering and serialization
# ---------------------------------------------------------------------------

def render_summary_table(report: EstimateReport) -> str:
    """Aggregate table: one row per model input, nats to 2 decimals, U in whole percents."""
    rows = [
        ("Facts", report.h_facts.total_nats, None, None),
        ("Goodhart", report.h_goodhart.total_nats, report.mi_goodhart, report.u_goodhart),
        ("Halsbury", report.h_halsbury.total_nats, report.mi_halsbury, report.u_halsbury),
    ]
    lines = [f"{'Model Input':<12} {'H':>6} {'MI':>6} {'U':>5}"]
    for name, h, mi, u in rows:
        mi_s = "-" if mi is None else f"{mi:.2f}"
        u_s = "-" if u is None else f"{u * 100:.0f}%"
        lines.append(f"{name:<12} {h:>6.2f} {mi_s:>6} {u_s:>5}")
    if report.mi_goodhart < 0 or report.mi_halsbury < 0:
        lines.append("note: negative MI values are empirical approximation error")
    return "\n".join(lines)


def render_article_table(report: EstimateReport) -> str:
    """Per-article table: entropy and MI to 3 decimals, U as percents to 2 decimals."""
    header = (
        f"{'Art':>6} {'H(Ok|F)':>9} {'MI_g':>8} {'U_g':>9} {'MI_h':>8} {'U_h':>9}"
    )
    lines = [header]
    for r in report.article_rows:
        lines.append(
            f"{r.article:>6} {r.h_facts:>9.3f} {r.mi_goodhart:>8.3f} "
            f"{r.u_goodhart * 100:>8.2f}% {r.mi_halsbury:>8.3f} {r.u_halsbury * 100:>8.2f}%"
        )
    return "\n".join(lines)


def article_csv(report: EstimateReport) -> str:
    """CSV of the per-article uncertainty-coefficient pairs (plot data series)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["article", "u_goodhart", "u_halsbury"])
    for r in report.article_rows:
        w.writerow([r.article, repr(r.u_goodhart), repr(r.u_halsbury)])
    return buf.getvalue()


def _estimate_to_dict(est: EntropyEstimate, include_losses: bool) -> dict:
    d = {
        "variant": est.variant.value,
        "n_cases": est.n_cases,
        "total_nats": est.total_nats,
        "per_article": [float(x) for x in est.per_article],
    }
    if include_losses:
        d["case_ids"] = list(est.case_ids)
        d["loss_matrix"] = [[float(x) for x in row] for row in est.loss_matrix]
    return d


def report_to_dict(report: EstimateReport, include_losses: bool = False) -> dict:
    return {
        "articles": list(report.articles),
        "estimates": {
            "facts": _estimate_to_dict(report.h_facts, include_losses),
            "goodhart": _estimate_to_dict(report.h_goodhart, include_losses),
            "halsbury": _estimate_to_dict(report.h_halsbury, include_losses),
        },
        "mi": {"goodhart": report.mi_goodhart, "halsbury": report.mi_halsbury},
        "u": {"goodhart": report.u_goodhart, "halsbury": report.u_halsbury},
        "per_article": [
            {
                "article": r.article,
                "h_facts": r.h_facts,
                "mi_goodhart": r.mi_goodhart,
                "u_goodhart": r.u_goodhart,
                "mi_halsbury": r.mi_halsbury,
                "u_halsbury": r.u_halsbury,
            }
            for r in report.article_rows
        ],
        "significance": list(report.significance),
        "metadata": dict(report.metadata),
    }


def save_report(report: EstimateReport, path: str | Path, include_losses: bool = False) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report, include_losses), sort_keys=True, indent=2),
        encoding="utf-8",
    )


def save_losses_csv(report: EstimateReport, path: str | Path) -> None:
    """Aligned per-case losses for the three variants (permutation-test input)."""
    base_ids = set(report.h_facts.case_ids)
    for est in (report.h_goodhart, report.h_halsbury):
        if set(est.case_ids) != base_ids:
            raise EstimatorError("variant case sets out of sync")
    g = dict(zip(report.h_goodhart.case_ids, report.h_goodhart.per_case_loss))
    h = dict(zip(report.h_halsbury.case_ids, report.h_halsbury.per_case_loss))
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["case_id", "loss_facts", "loss_goodhart", "loss_halsbury"])
        for cid, lf in zip(report.h_facts.case_ids, report.h_facts.per_case_loss):
            w.writerow([cid, repr(float(lf)), repr(float(g[cid])), repr(float(h[cid]))])


def load_losses_csv(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    case_ids: list[str] = []
    cols: list[list[float]] = [[], [], []]
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:4] != ["case_id", "loss_facts", "loss_goodhart", "loss_halsbury"]:
            raise EstimatorError(f"{path}: unexpected losses CSV header {header}")
        for row in reader:
            case_ids.append(row[0])
            for j in range(3):
                cols[j].append(float(row[1 + j]))
    return case_ids, np.asarray(cols[0]), np.asarray(cols[1]), np.asarray(cols[2])
