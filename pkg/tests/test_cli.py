import json
import math
from pathlib import Path

import pytest

from precedent_mi.cli import main
from precedent_mi.oracle import SyntheticSpec

from conftest import DATA_DIR

MINI = DATA_DIR / "mini"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture
def ingested_mini(tmp_path) -> Path:
    out = tmp_path / "ingested"
    rc = run_cli("ingest", "--corpus", MINI / "cases.jsonl",
                 "--articles", MINI / "articles.txt", "--outdir", out)
    assert rc == 0
    return out


@pytest.fixture
def synth_dir(tmp_path) -> Path:
    """Small synthetic corpus, generated and ingested through the CLI."""
    spec = SyntheticSpec(info_asymmetry=0.9, seed=42, train_frac=0.6, val_frac=0.2)
    spec_path = tmp_path / "spec.json"
    spec.save(spec_path)
    gen = tmp_path / "gen"
    assert run_cli("synth-gen", "--spec", spec_path, "--n", 400, "--outdir", gen) == 0
    ing = tmp_path / "synth_ingested"
    assert run_cli("ingest", "--corpus", gen / "cases.jsonl",
                   "--articles", gen / "articles.txt", "--outdir", ing) == 0
    return ing


class TestIngest:
    def test_mini_corpus_outputs(self, ingested_mini):
        stats = json.loads((ingested_mini / "stats.json").read_text())
        assert stats["subcorpus"]["n_documents"] == 30
        assert len(stats["rejected"]) == 2
        assert (ingested_mini / "corpus.jsonl").exists()
        assert (ingested_mini / "subcorpus.jsonl").exists()
        assert (ingested_mini / "graph.json").exists()
        assert (ingested_mini / "articles.txt").exists()
        assert "config_hash" in stats

    def test_zero_resolvable_citations_fails(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        corpus.write_text(json.dumps({
            "id": "a", "facts": "words", "arguments": "more",
            "citations": ["nowhere"], "split": "train",
        }) + "\n")
        arts = tmp_path / "a.txt"
        arts.write_text("2\n")
        rc = run_cli("ingest", "--corpus", corpus, "--articles", arts,
                     "--outdir", tmp_path / "out")
        assert rc == 1

    def test_custom_heading_patterns(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        recs = [
            {"id": "a", "body": "CIRCUMSTANCES\nfacts a\nMERITS\nlaw a",
             "citations": ["b"], "split": "test"},
            {"id": "b", "body": "CIRCUMSTANCES\nfacts b\nMERITS\nlaw b",
             "citations": ["a"], "split": "train"},
        ]
        corpus.write_text("\n".join(json.dumps(r) for r in recs) + "\n")
        arts = tmp_path / "a.txt"
        arts.write_text("2\n")
        rc = run_cli("ingest", "--corpus", corpus, "--articles", arts,
                     "--outdir", tmp_path / "out",
                     "--facts-pattern", "CIRCUMSTANCES",
                     "--arguments-pattern", "MERITS")
        assert rc == 0
        loaded = [json.loads(l) for l in (tmp_path / "out" / "corpus.jsonl").read_text().splitlines()]
        assert loaded[0]["facts"] == "facts a"
        assert loaded[0]["arguments"] == "law a"


class TestBundleTrainEstimate:
    def test_staged_pipeline(self, tmp_path, ingested_mini):
        bdir = tmp_path / "bundles"
        assert run_cli("bundle", "--corpus", ingested_mini, "--outdir", bdir) == 0
        for v in ("facts", "halsbury", "goodhart"):
            assert (bdir / f"bundles_{v}.jsonl").exists()
        assert (bdir / "tokenizer.json").exists()

        tdir = tmp_path / "models"
        for v in ("facts", "halsbury", "goodhart"):
            assert run_cli("train", "--corpus", ingested_mini, "--bundles", bdir,
                           "--variant", v, "--outdir", tdir,
                           "--epochs", 5, "--learning-rate", 0.05) == 0
            assert (tdir / f"model_{v}.json").exists()
            assert (tdir / f"scores_{v}.jsonl").exists()

        edir = tmp_path / "estimate"
        assert run_cli("estimate", "--corpus", ingested_mini,
                       "--scores", tdir / "scores_facts.jsonl",
                       tdir / "scores_halsbury.jsonl", tdir / "scores_goodhart.jsonl",
                       "--outdir", edir) == 0
        report = json.loads((edir / "report.json").read_text())
        assert set(report["estimates"]) == {"facts", "goodhart", "halsbury"}
        assert (edir / "losses.csv").exists()
        assert (edir / "summary.txt").exists()
        assert (edir / "per_article_u.csv").exists()

        assert run_cli("permtest", "--estimate", edir, "--n-permutations", 200) == 0
        sig = (edir / "significance.csv").read_text().splitlines()
        assert len(sig) == 4
        updated = json.loads((edir / "report.json").read_text())
        assert len(updated["significance"]) == 3

        assert run_cli("report", "--estimate", edir) == 0
        assert run_cli("report", "--estimate", edir, "--bits") == 0

    def test_estimate_rejects_missing_coverage(self, tmp_path, ingested_mini):
        scores = tmp_path / "partial.jsonl"
        scores.write_text(json.dumps(
            {"case_id": "mini-049", "variant": "facts",
             "probs": [0.5] * 9}) + "\n")
        rc = run_cli("estimate", "--corpus", ingested_mini,
                     "--scores", scores, "--outdir", tmp_path / "e")
        assert rc == 1


class TestTableFixtureViaScoreFiles:
    def test_published_scale_rendering(self, tmp_path, ingested_mini):
        """Score files engineered so per-case losses average 2.99/2.81/2.68
        nats render the aggregate table with MI 0.18/0.31 and U 6%/10%."""
        sub = [json.loads(l)
               for l in (ingested_mini / "subcorpus.jsonl").read_text().splitlines()]
        test_recs = [r for r in sub if r["split"] == "test"]
        articles = (ingested_mini / "articles.txt").read_text().split()
        k = len(articles)
        targets = {"facts": 2.99, "goodhart": 2.81, "halsbury": 2.68}
        rows = []
        for variant, total in targets.items():
            per_article = total / k
            for rec in test_recs:
                probs = [
                    math.exp(-per_article) if lab in rec["outcome"]
                    else 1.0 - math.exp(-per_article)
                    for lab in articles
                ]
                rows.append({"case_id": rec["id"], "variant": variant, "probs": probs})
        scores = tmp_path / "fixture_scores.jsonl"
        scores.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        out = tmp_path / "est"
        assert run_cli("estimate", "--corpus", ingested_mini,
                       "--scores", scores, "--outdir", out) == 0
        summary = (out / "summary.txt").read_text()
        lines = summary.splitlines()
        assert "2.99" in lines[1]
        assert "2.81" in lines[2] and "0.18" in lines[2] and "6%" in lines[2]
        assert "2.68" in lines[3] and "0.31" in lines[3] and "10%" in lines[3]


class TestScoreImport:
    def test_valid_and_invalid(self, tmp_path, ingested_mini):
        sub = [json.loads(l) for l in (ingested_mini / "subcorpus.jsonl").read_text().splitlines()]
        test_ids = [r["id"] for r in sub if r["split"] == "test"]
        rows = [
            {"case_id": cid, "variant": v, "probs": [0.5] * 9}
            for cid in test_ids for v in ("facts", "halsbury", "goodhart")
        ]
        good = tmp_path / "good.jsonl"
        good.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        assert run_cli("score-import", "--corpus", ingested_mini,
                       "--scores", good, "--outdir", tmp_path / "ok") == 0
        assert (tmp_path / "ok" / "scores.jsonl").exists()

        bad = tmp_path / "bad.jsonl"
        bad_rows = rows[:-1] + [dict(rows[-1], probs=[1.3] * 9)]
        bad.write_text("\n".join(json.dumps(r) for r in bad_rows) + "\n")
        assert run_cli("score-import", "--corpus", ingested_mini,
                       "--scores", bad, "--outdir", tmp_path / "no") == 1

        gap = tmp_path / "gap.jsonl"
        gap.write_text("\n".join(json.dumps(r) for r in rows[:-1]) + "\n")
        assert run_cli("score-import", "--corpus", ingested_mini,
                       "--scores", gap, "--outdir", tmp_path / "no2") == 1


class TestRun:
    def run_synth(self, synth_dir, outdir, *extra):
        return run_cli("run", "--corpus", synth_dir, "--outdir", outdir,
                       "--epochs", 60, "--learning-rate", 0.2,
                       "--n-permutations", 200, *extra)

    def test_builtin_end_to_end(self, tmp_path, synth_dir):
        out = tmp_path / "run"
        assert self.run_synth(synth_dir, out) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mi"]["halsbury"] > report["mi"]["goodhart"]
        assert len(report["significance"]) == 3
        for f in ("model_facts.json", "scores.jsonl", "tokenizer.json",
                  "summary.txt", "config.json"):
            assert (out / f).exists()

    def test_rerun_byte_identical(self, tmp_path, synth_dir):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert self.run_synth(synth_dir, out1) == 0
        assert self.run_synth(synth_dir, out2) == 0
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        assert (out1 / "scores.jsonl").read_bytes() == (out2 / "scores.jsonl").read_bytes()

    def test_external_matches_builtin(self, tmp_path, synth_dir):
        """Scorer-agnostic estimator: feeding the builtin scores back
        through external mode reproduces the estimates bit-for-bit."""
        b_out = tmp_path / "builtin"
        assert self.run_synth(synth_dir, b_out) == 0
        e_out = tmp_path / "external"
        assert self.run_synth(synth_dir, e_out, "--scorer-mode", "external",
                              "--scores", b_out / "scores.jsonl") == 0
        rb = json.loads((b_out / "report.json").read_text())
        re_ = json.loads((e_out / "report.json").read_text())
        assert rb["estimates"]["facts"]["total_nats"] == re_["estimates"]["facts"]["total_nats"]
        assert rb["mi"] == re_["mi"]
        assert rb["u"] == re_["u"]
        # external mode never trains
        assert not (e_out / "model_facts.json").exists()

    def test_builtin_never_reads_score_files(self, tmp_path, synth_dir):
        out = tmp_path / "r"
        rc = self.run_synth(synth_dir, out, "--scores", tmp_path / "does-not-exist.jsonl")
        assert rc == 0

    def test_external_missing_variant_aborts(self, tmp_path, synth_dir):
        b_out = tmp_path / "b"
        assert self.run_synth(synth_dir, b_out) == 0
        partial = tmp_path / "partial.jsonl"
        lines = [l for l in (b_out / "scores.jsonl").read_text().splitlines()
                 if json.loads(l)["variant"] != "halsbury"]
        partial.write_text("\n".join(lines) + "\n")
        rc = self.run_synth(synth_dir, tmp_path / "e", "--scorer-mode", "external",
                            "--scores", partial)
        assert rc == 1


class TestSynthCommands:
    def test_truth_command(self, tmp_path):
        spec = SyntheticSpec(info_asymmetry=0.5)
        spec_path = tmp_path / "spec.json"
        spec.save(spec_path)
        out = tmp_path / "truth.json"
        assert run_cli("synth-truth", "--spec", spec_path, "--out", out) == 0
        truth = json.loads(out.read_text())
        assert truth["mi_goodhart"] == pytest.approx(truth["mi_halsbury"], abs=1e-12)

    def test_infeasible_spec_exits_nonzero(self, tmp_path):
        spec = SyntheticSpec(
            vocab_size=8, doc_length=9,
            outcome_weights=(tuple([0.1] * 8), tuple([0.1] * 8)),
            outcome_bias=(0.0, 0.0),
        )
        spec_path = tmp_path / "spec.json"
        spec.save(spec_path)
        assert run_cli("synth-truth", "--spec", spec_path,
                       "--out", tmp_path / "t.json") == 1
        assert run_cli("synth-gen", "--spec", spec_path, "--n", 10,
                       "--outdir", tmp_path / "g") == 1

    def test_gen_deterministic(self, tmp_path):
        spec = SyntheticSpec(seed=77)
        spec_path = tmp_path / "spec.json"
        spec.save(spec_path)
        outs = []
        for name in ("g1", "g2"):
            assert run_cli("synth-gen", "--spec", spec_path, "--n", 50,
                           "--outdir", tmp_path / name) == 0
            outs.append((tmp_path / name / "cases.jsonl").read_bytes())
        assert outs[0] == outs[1]


class TestReportRendering:
    def test_bits_conversion(self, tmp_path, synth_dir, capsys):
        out = tmp_path / "run"
        assert run_cli("run", "--corpus", synth_dir, "--outdir", out,
                       "--epochs", 30, "--learning-rate", 0.2,
                       "--n-permutations", 50) == 0
        report = json.loads((out / "report.json").read_text())
        capsys.readouterr()
        assert run_cli("report", "--estimate", out, "--bits") == 0
        shown = capsys.readouterr().out
        h_bits = report["estimates"]["facts"]["total_nats"] / math.log(2)
        assert f"{h_bits:.2f}" in shown


def test_outdir_env_override(tmp_path, monkeypatch):
    corpus = tmp_path / "c.jsonl"
    recs = [
        {"id": "a", "facts": "w w", "arguments": "x", "citations": ["b"], "split": "test"},
        {"id": "b", "facts": "w", "arguments": "y", "citations": ["a"], "split": "train"},
    ]
    corpus.write_text("\n".join(json.dumps(r) for r in recs) + "\n")
    arts = tmp_path / "a.txt"
    arts.write_text("2\n")
    target = tmp_path / "env_target"
    monkeypatch.setenv("PRECEDENT_MI_OUTDIR", str(target))
    assert run_cli("ingest", "--corpus", corpus, "--articles", arts,
                   "--outdir", tmp_path / "ignored") == 0
    assert (target / "stats.json").exists()
    assert not (tmp_path / "ignored").exists()
