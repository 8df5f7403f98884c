import json
import math

import numpy as np
import pytest
from scipy.special import expit

from precedent_mi.corpus import Split, filter_subcorpus, write_cases_jsonl, ArticleSet
from precedent_mi.oracle import (
    InfeasibleSpecError,
    SyntheticSpec,
    exact_entropies,
    generate,
)


def spec_with(**kw) -> SyntheticSpec:
    return SyntheticSpec(**kw)


ASYM_ARGS = spec_with(info_asymmetry=0.9, seed=13)     # arguments informative
ASYM_FACTS = spec_with(info_asymmetry=0.1, seed=13)    # facts informative


class TestExactEntropies:
    def test_independent_outcome(self):
        spec = spec_with(
            n_articles=1,
            outcome_weights=((0.0, 0.0, 0.0, 0.0),),
            outcome_bias=(0.0,),
            marker_flip=0.5,
            evidence_strength=0.0,
        )
        truth = exact_entropies(spec)
        assert truth.h_facts == pytest.approx(math.log(2), abs=1e-12)
        assert truth.mi_goodhart == pytest.approx(0.0, abs=1e-12)
        assert truth.mi_halsbury == pytest.approx(0.0, abs=1e-12)

    def test_deterministic_outcome_from_facts(self):
        spec = spec_with(
            n_articles=1,
            outcome_weights=((120.0, 0.0, 0.0, 0.0),),
            outcome_bias=(-60.0,),
        )
        truth = exact_entropies(spec)
        assert truth.h_facts == pytest.approx(0.0, abs=1e-6)
        assert 0.0 <= truth.mi_goodhart <= 1e-6
        assert 0.0 <= truth.mi_halsbury <= 1e-6

    def test_frozen_reference_values(self):
        """Asymmetric spec frozen against an independent prototype computation."""
        truth = exact_entropies(spec_with(info_asymmetry=0.9))
        assert truth.h_facts == pytest.approx(1.154443, abs=2e-6)
        assert truth.h_halsbury == pytest.approx(0.258838, abs=2e-6)
        assert truth.h_goodhart == pytest.approx(0.900178, abs=2e-6)

    def test_mi_bounds(self):
        for spec in (ASYM_ARGS, ASYM_FACTS, spec_with()):
            t = exact_entropies(spec)
            for mi in (t.mi_goodhart, t.mi_halsbury):
                assert 0.0 <= mi <= t.h_facts

    def test_asymmetry_direction(self):
        t_args = exact_entropies(ASYM_ARGS)
        assert t_args.mi_halsbury > t_args.mi_goodhart
        t_facts = exact_entropies(ASYM_FACTS)
        assert t_facts.mi_goodhart > t_facts.mi_halsbury

    def test_symmetric_spec_equal_mi(self):
        t = exact_entropies(spec_with(info_asymmetry=0.5))
        assert t.mi_goodhart == pytest.approx(t.mi_halsbury, abs=1e-12)

    def test_infeasible_spec_rejected(self):
        spec = spec_with(
            vocab_size=8, doc_length=9,
            outcome_weights=(tuple([0.1] * 8), tuple([0.1] * 8)),
            outcome_bias=(0.0, 0.0),
        )
        with pytest.raises(InfeasibleSpecError):
            exact_entropies(spec)
        with pytest.raises(InfeasibleSpecError):
            generate(spec, 10)

    def test_monte_carlo_plugin_cross_check(self):
        """Independent sampling + closed-form posterior, 10^6 draws.

        The plug-in average of -ln p_true(o | conditioning) must agree with
        the enumeration within Monte Carlo error.
        """
        spec = ASYM_ARGS
        truth = exact_entropies(spec)
        n = 1_000_000
        rng = np.random.default_rng(99)
        V, L, K = spec.vocab_size, spec.doc_length, spec.n_articles
        m, n_e = spec.precedents_per_case, spec.evidence_tokens_per_article
        W = np.asarray(spec.outcome_weights)
        b = np.asarray(spec.outcome_bias)

        counts = rng.multinomial(L, np.full(V, 1.0 / V), size=n)
        s = counts @ W.T + b
        o = (rng.random((n, K)) < expit(s)).astype(float)

        loss_f = -np.log(np.where(o == 1, expit(s), expit(-s)))
        h_f_mc = float(loss_f.sum(axis=1).mean())
        assert h_f_mc == pytest.approx(truth.h_facts, abs=0.01)

        markers = rng.random((n, m, K)) < spec.marker_flip
        M = np.where(markers, 1 - o[:, None, :], o[:, None, :]).sum(axis=1)
        llr_marker = (M * math.log((1 - spec.marker_flip) / spec.marker_flip)
                      + (m - M) * math.log(spec.marker_flip / (1 - spec.marker_flip)))

        for flip, h_true in ((spec.arg_flip, truth.h_halsbury),
                             (spec.fact_flip, truth.h_goodhart)):
            p_pos = np.where(o == 1, 1 - flip, flip)
            T = rng.binomial(n_e * m, p_pos)
            llr = (llr_marker
                   + T * math.log((1 - flip) / flip)
                   + (n_e * m - T) * math.log(flip / (1 - flip)))
            post = s + llr
            loss = -np.log(np.where(o == 1, expit(post), expit(-post)))
            h_mc = float(loss.sum(axis=1).mean())
            assert h_mc == pytest.approx(h_true, abs=0.01)


class TestGenerate:
    def test_deterministic_given_seed(self, tmp_path):
        c1, g1 = generate(ASYM_ARGS, 60)
        c2, g2 = generate(ASYM_ARGS, 60)
        assert c1 == c2
        assert g1 == g2
        arts = ArticleSet(ASYM_ARGS.article_labels)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_cases_jsonl(c1, arts, p1)
        write_cases_jsonl(c2, arts, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self):
        c1, _ = generate(spec_with(seed=1), 40)
        c2, _ = generate(spec_with(seed=2), 40)
        assert c1 != c2

    def test_structure(self):
        spec = spec_with(precedents_per_case=3)
        cases, graph = generate(spec, 50)
        assert len(cases) == 50 * 4
        citing = [c for c in cases if c.cited_ids]
        assert len(citing) == 50
        for c in citing:
            assert graph.precedent_ids(c.id) == c.cited_ids
            assert graph.unresolved[c.id] == 0
        sub = filter_subcorpus(cases, graph)
        assert sub == citing

    def test_split_sizes(self):
        spec = spec_with(train_frac=0.8, val_frac=0.1)
        cases, graph = generate(spec, 100)
        sub = filter_subcorpus(cases, graph)
        by_split = {s: sum(1 for c in sub if c.split is s) for s in Split}
        assert by_split == {Split.TRAIN: 80, Split.VALIDATION: 10, Split.TEST: 10}

    def test_base_rate_when_independent(self):
        spec = spec_with(
            n_articles=1,
            outcome_weights=((0.0, 0.0, 0.0, 0.0),),
            outcome_bias=(0.0,),
            marker_flip=0.5,
            evidence_strength=0.0,
            seed=5,
        )
        cases, graph = generate(spec, 3000)
        sub = filter_subcorpus(cases, graph)
        rate = sum(c.outcome[0] for c in sub) / len(sub)
        assert rate == pytest.approx(0.5, abs=0.03)

    def test_labels_reproducible_from_text(self):
        spec = spec_with(
            n_articles=1,
            outcome_weights=((120.0, 0.0, 0.0, 0.0),),
            outcome_bias=(-60.0,),
            seed=6,
        )
        cases, graph = generate(spec, 400)
        for c in filter_subcorpus(cases, graph):
            expected = 1 if "f0" in c.facts.split() else 0
            assert c.outcome[0] == expected

    def test_precedent_material_present(self):
        cases, graph = generate(spec_with(), 10)
        sub = filter_subcorpus(cases, graph)
        index = {c.id: c for c in cases}
        for c in sub:
            for pid in graph.precedent_ids(c.id):
                prec = index[pid]
                assert prec.facts and prec.arguments
                assert len(prec.outcome) == 2

    def test_spec_roundtrip(self, tmp_path):
        ASYM_ARGS.save(tmp_path / "spec.json")
        assert SyntheticSpec.load(tmp_path / "spec.json") == ASYM_ARGS

    def test_ground_truth_roundtrip(self, tmp_path):
        truth = exact_entropies(spec_with())
        truth.save(tmp_path / "t.json")
        loaded = json.loads((tmp_path / "t.json").read_text())
        assert loaded == truth.to_dict()

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            spec_with(marker_flip=0.0)
        with pytest.raises(ValueError):
            spec_with(evidence_strength=0.6)
        with pytest.raises(ValueError):
            spec_with(outcome_weights=((1.0,),))
        with pytest.raises(ValueError):
            spec_with(train_frac=0.9, val_frac=0.2)
        with pytest.raises(ValueError):
            spec_with(evidence_tokens_per_article=0)


class TestEstimatorConvergence:
    """Cross-entropy estimates approach ground truth as the evaluation
    sample grows (one trained model per variant, nested eval prefixes)."""

    def test_tolerance_schedule(self):
        from precedent_mi.cli import RunConfig, run_pipeline
        from precedent_mi import estimator as est_mod
        from precedent_mi.bundles import Variant

        spec = spec_with(info_asymmetry=0.7, seed=23,
                         train_frac=0.24, val_frac=0.04)
        truth = exact_entropies(spec)
        # 25k cases: 6k train, 1k val, 18k test
        cases, graph = generate(spec, 25_000)
        articles = ArticleSet(spec.article_labels)
        config = RunConfig(min_freq=5, learning_rate=0.15, epochs=800,
                           n_permutations=10)
        report, artifacts = run_pipeline(cases, graph, articles, config)

        scores = artifacts["scores"]
        gold = {c.id: c.outcome for c in cases}
        test_ids = list(report.h_facts.case_ids)
        for n_eval, tol in ((1000, 0.1), (10_000, 0.05)):
            ids = test_ids[:n_eval]
            for variant, h_true in ((Variant.FACTS, truth.h_facts),
                                    (Variant.GOODHART, truth.h_goodhart),
                                    (Variant.HALSBURY, truth.h_halsbury)):
                est = est_mod.cross_entropy(scores, gold, variant, ids)
                assert abs(est.total_nats - h_true) <= tol, (n_eval, variant)
