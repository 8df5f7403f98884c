"""Command-line pipeline: ingest -> bundle -> train/score -> estimate -> test -> report.

Subcommands: ingest, bundle, train, score-import, estimate, permtest,
report, synth-gen, synth-truth, plus `run` composing the post-ingest
stages. Every output directory is self-describing: it carries the config
(with its hash) that produced it, and reruns with the same config are
byte-identical in builtin mode.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import shutil
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, bundles, corpus, estimator, models, oracle, stats
from .bundles import Variant
from .corpus import Split

log = logging.getLogger(__name__)

OUTDIR_ENV = "PRECEDENT_MI_OUTDIR"
COMPARISONS = (
    ("goodhart", "facts"),
    ("halsbury", "facts"),
    ("halsbury", "goodhart"),
)

# Method choices surfaced in every report, since both are this tool's own
# conventions rather than properties of the estimand.
REPORT_NOTES = {
    "precedent_layout": (
        "precedents concatenated in citation order (outcome markers before "
        "material), jointly head-truncated at the precedent budget"
    ),
    "bh_family": "aggregate comparisons: " + ", ".join(
        f"{a}-vs-{b}" for a, b in COMPARISONS
    ),
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run depends on; hashed into every artifact."""

    min_freq: int = 5
    facts_budget: int = 512
    precedent_budget: int = 512
    ngram_orders: tuple[int, ...] = (1, 2)
    hash_dim: int = 2**20
    learning_rate: float = 0.2
    epochs: int = 300
    seed: int = 0
    scorer_mode: str = "builtin"            # builtin | external
    n_permutations: int = 10_000
    bh_q: float = 0.05

    def __post_init__(self) -> None:
        if self.facts_budget <= 0 or self.precedent_budget <= 0:
            raise ValueError("truncation budgets must be positive")
        if self.scorer_mode not in ("builtin", "external"):
            raise ValueError(f"unknown scorer mode {self.scorer_mode!r}")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ngram_orders"] = list(self.ngram_orders)
        d["config_hash"] = self.hash()
        return d


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2), encoding="utf-8")


def _resolve_outdir(path_arg: str) -> Path:
    outdir = Path(os.environ.get(OUTDIR_ENV) or path_arg)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


# ---------------------------------------------------------------------------
# Pipeline pieces shared by subcommands and tests
# ---------------------------------------------------------------------------

def ingest_corpus(
    records: Sequence[dict],
    articles: corpus.ArticleSet,
    facts_patterns: Sequence[str] = corpus.DEFAULT_FACTS_PATTERNS,
    arguments_patterns: Sequence[str] = corpus.DEFAULT_ARGUMENTS_PATTERNS,
) -> tuple[list[corpus.Case], list[corpus.Case], corpus.CitationGraph, dict]:
    """Parse, resolve, filter; returns (all cases, sub-corpus, graph, stats dict)."""
    cases, rejected = corpus.parse_corpus(records, articles, facts_patterns, arguments_patterns)
    graph = corpus.resolve_citations(cases)
    graph.validate([c.id for c in cases])
    sub = corpus.filter_subcorpus(cases, graph)
    stats_payload = {
        "full": corpus.corpus_stats(cases, graph, articles).to_dict(),
        "subcorpus": corpus.corpus_stats(sub, graph, articles).to_dict(),
        "rejected": [{"id": rid, "reason": reason} for rid, reason in rejected],
    }
    return cases, sub, graph, stats_payload


def build_aligned_bundles(
    sub: Sequence[corpus.Case],
    index: dict[str, corpus.Case],
    graph: corpus.CitationGraph,
    tok: bundles.Tokenizer,
    config: RunConfig,
) -> dict[Variant, list[bundles.ConditioningBundle]]:
    """All three variants over the same case set.

    Cases that cannot produce some variant (e.g. no precedent argument
    material) are dropped from every variant so the three estimates stay
    comparable; drops are logged.
    """
    per_variant: dict[Variant, dict[str, bundles.ConditioningBundle]] = {}
    dropped: set[str] = set()
    for variant in Variant:
        built, skipped = bundles.build_corpus_bundles(
            sub, index, graph, variant, tok,
            facts_budget=config.facts_budget,
            precedent_budget=config.precedent_budget,
        )
        per_variant[variant] = {b.case_id: b for b in built}
        dropped.update(skipped)
    if dropped:
        log.warning("dropping %d case(s) lacking material for some variant", len(dropped))
    kept = [c.id for c in sub if c.id not in dropped]
    if not kept:
        raise bundles.BundleError("no case has material for all three variants")
    return {v: [per_variant[v][cid] for cid in kept] for v in Variant}


def _split_ids(cases: Sequence[corpus.Case], keep: set[str]) -> dict[Split, list[str]]:
    out: dict[Split, list[str]] = {s: [] for s in Split}
    for c in cases:
        if c.id in keep:
            out[c.split].append(c.id)
    return out


def train_variant_model(
    variant_bundles: Sequence[bundles.ConditioningBundle],
    by_split: dict[Split, list[str]],
    gold: dict[str, Sequence[int]],
    articles: corpus.ArticleSet,
    config: RunConfig,
) -> models.OutcomeModel:
    by_id = {b.case_id: b for b in variant_bundles}
    train_ids = by_split[Split.TRAIN]
    val_ids = by_split[Split.VALIDATION]
    spec = models.FeatureSpec(ngram_orders=config.ngram_orders, hash_dim=config.hash_dim)
    tc = models.TrainConfig(
        learning_rate=config.learning_rate, epochs=config.epochs, seed=config.seed
    )
    return models.train(
        [by_id[i] for i in train_ids],
        [gold[i] for i in train_ids],
        articles.labels,
        config=tc,
        spec=spec,
        val_bundles=[by_id[i] for i in val_ids],
        val_outcomes=[gold[i] for i in val_ids],
    )


def run_pipeline(
    cases: Sequence[corpus.Case],
    graph: corpus.CitationGraph,
    articles: corpus.ArticleSet,
    config: RunConfig,
    score_table: models.ScoreTable | None = None,
) -> tuple[estimator.EstimateReport, dict]:
    """Post-ingest pipeline: bundles, builtin training or external scores,
    cross-entropies on the test split, permutation tests, report.

    Returns (report, artifacts) where artifacts holds the tokenizer,
    trained models and score table for persistence.
    """
    if config.scorer_mode == "external" and score_table is None:
        raise ValueError("external scorer mode requires a score table")
    if config.scorer_mode == "builtin" and score_table is not None:
        raise ValueError("builtin scorer mode must not receive external scores")

    index = corpus.case_index(cases)
    sub = corpus.filter_subcorpus(cases, graph)
    gold = {c.id: c.outcome for c in sub}

    tok = bundles.build_tokenizer(cases, articles, min_freq=config.min_freq)
    aligned = build_aligned_bundles(sub, index, graph, tok, config)
    kept = {b.case_id for b in aligned[Variant.FACTS]}
    by_split = _split_ids(sub, kept)
    test_ids = by_split[Split.TEST]
    if not test_ids:
        raise corpus.CorpusError("no test-split cases to estimate on")

    trained: dict[str, models.OutcomeModel] = {}
    if config.scorer_mode == "builtin":
        score_table = models.ScoreTable(n_articles=len(articles))
        test_set = set(test_ids)
        for variant in Variant:
            model = train_variant_model(aligned[variant], by_split, gold, articles, config)
            trained[variant.value] = model
            score_table.merge(models.score_bundles(
                model, [b for b in aligned[variant] if b.case_id in test_set]
            ))
    else:
        score_table.check_coverage(test_ids, list(Variant))

    h_facts = estimator.cross_entropy(score_table, gold, Variant.FACTS, test_ids)
    h_goodhart = estimator.cross_entropy(score_table, gold, Variant.GOODHART, test_ids)
    h_halsbury = estimator.cross_entropy(score_table, gold, Variant.HALSBURY, test_ids)

    report = estimator.build_report(
        h_facts, h_goodhart, h_halsbury, articles.labels,
        metadata={
            "config": config.to_dict(),
            "n_train": len(by_split[Split.TRAIN]),
            "n_validation": len(by_split[Split.VALIDATION]),
            "n_test": len(test_ids),
            "dropped_cases": sorted(set(c.id for c in sub) - kept),
            "tool_version": __version__,
            "notes": dict(REPORT_NOTES),
        },
    )
    report.significance = compute_significance(report, config)

    artifacts = {"tokenizer": tok, "models": trained, "scores": score_table,
                 "bundles": aligned}
    return report, artifacts


def compute_significance(report: estimator.EstimateReport, config: RunConfig) -> list[dict]:
    """Paired permutation tests over per-case losses for the three
    aggregate comparisons, BH-corrected as one family."""
    losses = {
        "facts": (report.h_facts.case_ids, report.h_facts.per_case_loss),
        "goodhart": (report.h_goodhart.case_ids, report.h_goodhart.per_case_loss),
        "halsbury": (report.h_halsbury.case_ids, report.h_halsbury.per_case_loss),
    }
    results = []
    for name_a, name_b in COMPARISONS:
        ids_a, la = losses[name_a]
        ids_b, lb = losses[name_b]
        pos_b = {cid: i for i, cid in enumerate(ids_b)}
        order = [pos_b[cid] for cid in ids_a]
        pairs = stats.PairedLosses(tuple(ids_a), la, lb[order])
        results.append(stats.paired_permutation_test(
            pairs, n_permutations=config.n_permutations, seed=config.seed,
            comparison=f"{name_a}-vs-{name_b}",
        ))
    results = stats.apply_bh_correction(results, q=config.bh_q)
    return [asdict(r) for r in results]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    articles = corpus.ArticleSet.from_file(args.articles)
    records = corpus.read_jsonl(args.corpus)
    facts_patterns = args.facts_pattern or list(corpus.DEFAULT_FACTS_PATTERNS)
    args_patterns = args.arguments_pattern or list(corpus.DEFAULT_ARGUMENTS_PATTERNS)
    try:
        cases, sub, graph, stats_payload = ingest_corpus(
            records, articles, facts_patterns, args_patterns
        )
    except corpus.CorpusError as e:
        log.error("ingest failed: %s", e)
        return 1

    config = config_from_args(args)
    stats_payload["config_hash"] = config.hash()
    stats_payload["seed"] = config.seed
    corpus.write_cases_jsonl(cases, articles, outdir / "corpus.jsonl")
    corpus.write_cases_jsonl(sub, articles, outdir / "subcorpus.jsonl")
    _write_json(outdir / "graph.json", graph.to_dict())
    _write_json(outdir / "stats.json", stats_payload)
    _write_json(outdir / "config.json", config.to_dict())
    shutil.copyfile(args.articles, outdir / "articles.txt")

    s = stats_payload["subcorpus"]
    print(f"admitted {len(cases)} case(s), sub-corpus {s['n_documents']} "
          f"(splits {s['per_split']})")
    print(f"in-corpus links {s['in_corpus_links']} to {s['in_corpus_types']} types; "
          f"out-of-corpus links {s['out_corpus_links']} to {s['out_corpus_types']} types")
    return 0


def _load_ingested(corpus_dir: str | Path) -> tuple[
    list[corpus.Case], list[corpus.Case], corpus.CitationGraph, corpus.ArticleSet
]:
    d = Path(corpus_dir)
    articles = corpus.ArticleSet.from_file(d / "articles.txt")
    cases = corpus.load_cases_jsonl(d / "corpus.jsonl", articles)
    sub_ids = {c.id for c in corpus.load_cases_jsonl(d / "subcorpus.jsonl", articles)}
    sub = [c for c in cases if c.id in sub_ids]
    graph = corpus.CitationGraph.from_dict(
        json.loads((d / "graph.json").read_text(encoding="utf-8"))
    )
    return cases, sub, graph, articles


def cmd_bundle(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    config = config_from_args(args)
    cases, sub, graph, articles = _load_ingested(args.corpus)
    index = corpus.case_index(cases)
    tok = bundles.build_tokenizer(cases, articles, min_freq=config.min_freq)
    tok.save(outdir / "tokenizer.json")

    if args.variant == "all":
        aligned = build_aligned_bundles(sub, index, graph, tok, config)
        for variant, blist in aligned.items():
            bundles.write_bundles_jsonl(blist, outdir / f"bundles_{variant.value}.jsonl")
            print(f"{variant.value}: {len(blist)} bundle(s)")
    else:
        variant = Variant(args.variant)
        built, skipped = bundles.build_corpus_bundles(
            sub, index, graph, variant, tok,
            facts_budget=config.facts_budget, precedent_budget=config.precedent_budget,
        )
        bundles.write_bundles_jsonl(built, outdir / f"bundles_{variant.value}.jsonl")
        print(f"{variant.value}: {len(built)} bundle(s), {len(skipped)} skipped")
    _write_json(outdir / "config.json", config.to_dict())
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    config = config_from_args(args)
    cases, sub, graph, articles = _load_ingested(args.corpus)
    variant = Variant(args.variant)
    blist = bundles.read_bundles_jsonl(Path(args.bundles) / f"bundles_{variant.value}.jsonl")
    gold = {c.id: c.outcome for c in sub}
    by_split = _split_ids(sub, {b.case_id for b in blist})

    model = train_variant_model(blist, by_split, gold, articles, config)
    model.save(outdir / f"model_{variant.value}.json")

    test_set = set(by_split[Split.TEST])
    table = models.score_bundles(model, [b for b in blist if b.case_id in test_set])
    table.save(outdir / f"scores_{variant.value}.jsonl")
    _write_json(outdir / "config.json", config.to_dict())
    print(f"trained {variant.value} model (best epoch {model.best_epoch}); "
          f"scored {len(test_set)} test case(s)")
    return 0


def _load_score_files(paths: Sequence[str], n_articles: int) -> models.ScoreTable:
    table = models.ScoreTable(n_articles=n_articles)
    for p in paths:
        part = models.load_external_scores(p, n_articles)
        for (cid, variant), probs in part.rows.items():
            table.add(cid, variant, probs)
    return table


def cmd_score_import(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    _, sub, _, articles = _load_ingested(args.corpus)
    try:
        table = _load_score_files(args.scores, len(articles))
        test_ids = [c.id for c in sub if c.split is Split.TEST]
        table.check_coverage(test_ids, list(Variant))
    except models.ScoreValidationError as e:
        log.error("score validation failed: %s", e)
        return 1
    table.save(outdir / "scores.jsonl")
    print(f"validated {len(table.rows)} score row(s)")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    config = config_from_args(args)
    _, sub, _, articles = _load_ingested(args.corpus)
    gold = {c.id: c.outcome for c in sub}
    test_ids = [c.id for c in sub if c.split is Split.TEST]

    try:
        table = _load_score_files(args.scores, len(articles))
        table.check_coverage(test_ids, list(Variant))
        h = {
            v: estimator.cross_entropy(table, gold, v, test_ids)
            for v in Variant
        }
        report = estimator.build_report(
            h[Variant.FACTS], h[Variant.GOODHART], h[Variant.HALSBURY], articles.labels,
            metadata={"config": config.to_dict(), "n_test": len(test_ids),
                      "tool_version": __version__, "notes": dict(REPORT_NOTES)},
        )
    except (models.ScoreValidationError, estimator.EstimatorError) as e:
        log.error("estimate failed: %s", e)
        return 1

    report.significance = compute_significance(report, config)
    write_report_artifacts(report, outdir, include_losses=args.include_losses)
    print(estimator.render_summary_table(report))
    return 0


def write_report_artifacts(
    report: estimator.EstimateReport, outdir: Path, include_losses: bool = False
) -> None:
    estimator.save_report(report, outdir / "report.json", include_losses=include_losses)
    estimator.save_losses_csv(report, outdir / "losses.csv")
    (outdir / "summary.txt").write_text(
        estimator.render_summary_table(report) + "\n", encoding="utf-8"
    )
    (outdir / "per_article.txt").write_text(
        estimator.render_article_table(report) + "\n", encoding="utf-8"
    )
    (outdir / "per_article_u.csv").write_text(
        estimator.article_csv(report), encoding="utf-8"
    )


def cmd_permtest(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir or args.estimate)
    try:
        case_ids, lf, lg, lh = estimator.load_losses_csv(Path(args.estimate) / "losses.csv")
        losses = {"facts": lf, "goodhart": lg, "halsbury": lh}
        results = []
        for name_a, name_b in COMPARISONS:
            pairs = stats.PairedLosses(tuple(case_ids), losses[name_a], losses[name_b])
            results.append(stats.paired_permutation_test(
                pairs, n_permutations=args.n_permutations, seed=args.seed,
                comparison=f"{name_a}-vs-{name_b}",
            ))
        results = stats.apply_bh_correction(results, q=args.q)
    except (estimator.EstimatorError, ValueError) as e:
        log.error("permtest failed: %s", e)
        return 1

    lines = ["comparison,statistic,p_value,n_permutations,seed,method,bh_rejected"]
    for r in results:
        lines.append(f"{r.comparison},{r.statistic!r},{r.p_value!r},"
                     f"{r.n_permutations},{r.seed},{r.method},{r.bh_rejected}")
        print(f"{r.comparison}: stat={r.statistic:+.4f} p={r.p_value:.4g} "
              f"{'rejected' if r.bh_rejected else 'not rejected'}")
    (outdir / "significance.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    report_path = Path(args.estimate) / "report.json"
    if report_path.exists():
        payload = json.loads(report_path.read_text(encoding="utf-8"))
        payload["significance"] = [asdict(r) for r in results]
        _write_json(report_path, payload)
    return 0


def _scale_report(payload: dict, factor: float) -> dict:
    scaled = json.loads(json.dumps(payload))
    for est in scaled["estimates"].values():
        est["total_nats"] = est["total_nats"] * factor
        est["per_article"] = [x * factor for x in est["per_article"]]
    for key in ("goodhart", "halsbury"):
        scaled["mi"][key] *= factor
    for row in scaled["per_article"]:
        for key in ("h_facts", "mi_goodhart", "mi_halsbury"):
            row[key] *= factor
    return scaled


def cmd_report(args: argparse.Namespace) -> int:
    payload = json.loads((Path(args.estimate) / "report.json").read_text(encoding="utf-8"))
    if args.bits:
        payload = _scale_report(payload, 1.0 / math.log(2.0))
    report = _report_from_dict(payload)
    print(estimator.render_summary_table(report))
    print()
    print(estimator.render_article_table(report))
    if payload.get("significance"):
        print()
        for r in payload["significance"]:
            print(f"{r['comparison']}: stat={r['statistic']:+.4f} p={r['p_value']:.4g} "
                  f"{'rejected' if r['bh_rejected'] else 'not rejected'}")
    return 0


def _report_from_dict(payload: dict) -> estimator.EstimateReport:
    """Rebuild a renderable report from serialized aggregates (no loss matrices)."""

    def fake_estimate(name: str) -> estimator.EntropyEstimate:
        d = payload["estimates"][name]
        per_article = np.asarray(d["per_article"], dtype=np.float64)
        n = int(d["n_cases"])
        return estimator.EntropyEstimate(
            variant=Variant(d["variant"]),
            case_ids=tuple(d.get("case_ids", [f"case{i}" for i in range(n)])),
            loss_matrix=np.tile(per_article, (n, 1)),
            per_article=per_article,
            per_case_loss=np.full(n, float(d["total_nats"])),
            total_nats=float(d["total_nats"]),
        )

    rows = [
        estimator.ArticleRow(
            article=r["article"], h_facts=r["h_facts"],
            mi_goodhart=r["mi_goodhart"], u_goodhart=r["u_goodhart"],
            mi_halsbury=r["mi_halsbury"], u_halsbury=r["u_halsbury"],
        )
        for r in payload["per_article"]
    ]
    return estimator.EstimateReport(
        articles=tuple(payload["articles"]),
        h_facts=fake_estimate("facts"),
        h_goodhart=fake_estimate("goodhart"),
        h_halsbury=fake_estimate("halsbury"),
        mi_goodhart=float(payload["mi"]["goodhart"]),
        mi_halsbury=float(payload["mi"]["halsbury"]),
        u_goodhart=float(payload["u"]["goodhart"]),
        u_halsbury=float(payload["u"]["halsbury"]),
        article_rows=rows,
        significance=list(payload.get("significance", [])),
        metadata=dict(payload.get("metadata", {})),
    )


def cmd_run(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    config = config_from_args(args)
    cases, _, graph, articles = _load_ingested(args.corpus)

    score_table = None
    if config.scorer_mode == "external":
        try:
            score_table = _load_score_files(args.scores, len(articles))
        except models.ScoreValidationError as e:
            log.error("score validation failed: %s", e)
            return 1
    try:
        report, artifacts = run_pipeline(cases, graph, articles, config, score_table)
    except (corpus.CorpusError, bundles.BundleError, models.ScoreValidationError,
            estimator.EstimatorError, models.TrainingDivergedError) as e:
        log.error("run failed: %s", e)
        return 1

    _write_json(outdir / "config.json", config.to_dict())
    artifacts["tokenizer"].save(outdir / "tokenizer.json")
    for name, model in artifacts["models"].items():
        model.save(outdir / f"model_{name}.json")
    artifacts["scores"].save(outdir / "scores.jsonl")
    for variant, blist in artifacts["bundles"].items():
        bundles.write_bundles_jsonl(blist, outdir / f"bundles_{variant.value}.jsonl")
    write_report_artifacts(report, outdir, include_losses=args.include_losses)
    print(estimator.render_summary_table(report))
    return 0


def cmd_synth_gen(args: argparse.Namespace) -> int:
    outdir = _resolve_outdir(args.outdir)
    spec = oracle.SyntheticSpec.load(args.spec)
    try:
        cases, _ = oracle.generate(spec, args.n)
    except oracle.InfeasibleSpecError as e:
        log.error("spec infeasible: %s", e)
        return 1
    articles = corpus.ArticleSet(spec.article_labels)
    corpus.write_cases_jsonl(cases, articles, outdir / "cases.jsonl")
    (outdir / "articles.txt").write_text(
        "\n".join(articles.labels) + "\n", encoding="utf-8"
    )
    spec.save(outdir / "spec.json")
    print(f"generated {len(cases)} case(s) ({args.n} citing) into {outdir}")
    return 0


def cmd_synth_truth(args: argparse.Namespace) -> int:
    spec = oracle.SyntheticSpec.load(args.spec)
    try:
        truth = oracle.exact_entropies(spec)
    except oracle.InfeasibleSpecError as e:
        log.error("spec infeasible: %s", e)
        return 1
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    truth.save(out)
    print(json.dumps(truth.to_dict(), sort_keys=True, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _parse_orders(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = RunConfig()
    fields = {}
    for name in ("min_freq", "facts_budget", "precedent_budget", "hash_dim",
                 "learning_rate", "epochs", "seed", "scorer_mode",
                 "n_permutations", "bh_q"):
        if getattr(args, name, None) is not None:
            fields[name] = getattr(args, name)
    if getattr(args, "ngram_orders", None) is not None:
        fields["ngram_orders"] = _parse_orders(args.ngram_orders)
    return replace(base, **fields)


def _add_config_flags(p: argparse.ArgumentParser, training: bool = False) -> None:
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--facts-budget", type=int, dest="facts_budget")
    p.add_argument("--precedent-budget", type=int, dest="precedent_budget")
    p.add_argument("--seed", type=int, dest="seed")
    if training:
        p.add_argument("--ngram-orders", dest="ngram_orders",
                       help="comma-separated n-gram orders, e.g. 1,2")
        p.add_argument("--hash-dim", type=int, dest="hash_dim")
        p.add_argument("--learning-rate", type=float, dest="learning_rate")
        p.add_argument("--epochs", type=int, dest="epochs")
    p.add_argument("--n-permutations", type=int, dest="n_permutations")
    p.add_argument("--bh-q", type=float, dest="bh_q")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precedent-mi",
        description="Estimate how much precedent arguments vs. facts tell us about case outcomes.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse corpus, resolve citations, filter")
    p.add_argument("--corpus", required=True, help="input JSONL of case records")
    p.add_argument("--articles", required=True, help="newline-delimited article labels")
    p.add_argument("--outdir", required=True)
    p.add_argument("--facts-pattern", action="append")
    p.add_argument("--arguments-pattern", action="append")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("bundle", help="tokenize and assemble conditioning bundles")
    p.add_argument("--corpus", required=True, help="ingested corpus directory")
    p.add_argument("--variant", default="all",
                   choices=["all", "facts", "halsbury", "goodhart"])
    p.add_argument("--outdir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("train", help="train the builtin classifier for one variant")
    p.add_argument("--corpus", required=True)
    p.add_argument("--bundles", required=True, help="directory with bundles_*.jsonl")
    p.add_argument("--variant", required=True, choices=["facts", "halsbury", "goodhart"])
    p.add_argument("--outdir", required=True)
    _add_config_flags(p, training=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score-import", help="validate externally produced score files")
    p.add_argument("--corpus", required=True)
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_score_import)

    p = sub.add_parser("estimate", help="cross-entropies, MI and U from score files")
    p.add_argument("--corpus", required=True)
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--outdir", required=True)
    p.add_argument("--include-losses", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("permtest", help="paired permutation tests with BH correction")
    p.add_argument("--estimate", required=True, help="directory holding losses.csv")
    p.add_argument("--outdir")
    p.add_argument("--n-permutations", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=float, default=0.05)
    p.set_defaults(func=cmd_permtest)

    p = sub.add_parser("report", help="render tables from a saved report")
    p.add_argument("--estimate", required=True, help="directory holding report.json")
    p.add_argument("--bits", action="store_true", help="display bits instead of nats")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth-gen", help="generate a synthetic citation corpus")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True, help="number of citing cases")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("synth-truth", help="exact ground-truth entropies for a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_truth)

    p = sub.add_parser("run", help="bundle + train/score + estimate + permtest + report")
    p.add_argument("--corpus", required=True, help="ingested corpus directory")
    p.add_argument("--outdir", required=True)
    p.add_argument("--scorer-mode", choices=["builtin", "external"], dest="scorer_mode")
    p.add_argument("--scores", nargs="*", default=[],
                   help="score files (external mode only)")
    p.add_argument("--include-losses", action="store_true")
    _add_config_flags(p, training=True)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
