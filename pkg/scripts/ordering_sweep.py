#!/usr/bin/env python3
"""Seeded ordering sweep: how often does the pipeline rank the two
conditioning sides the way the generating process does?

Runs the full builtin pipeline per seed and direction and reports hit
counts. Smaller, faster settings than the acceptance gate by default.
"""

from __future__ import annotations

import argparse

from precedent_mi.cli import RunConfig, run_pipeline
from precedent_mi.corpus import ArticleSet
from precedent_mi.oracle import SyntheticSpec, exact_entropies, generate


def sweep(asymmetry: float, seeds: int, n_cases: int, config: RunConfig) -> int:
    hits = 0
    truth_printed = False
    for seed in range(seeds):
        spec = SyntheticSpec(info_asymmetry=asymmetry, seed=seed,
                             train_frac=0.3, val_frac=0.05)
        if not truth_printed:
            truth = exact_entropies(spec)
            print(f"  true MI: goodhart {truth.mi_goodhart:.4f}, "
                  f"halsbury {truth.mi_halsbury:.4f}")
            truth_printed = True
        cases, graph = generate(spec, n_cases)
        report, _ = run_pipeline(cases, graph, ArticleSet(spec.article_labels), config)
        want_h = asymmetry > 0.5
        hit = (report.mi_halsbury > report.mi_goodhart) == want_h
        hits += hit
        print(f"  seed {seed}: MI_g={report.mi_goodhart:+.4f} "
              f"MI_h={report.mi_halsbury:+.4f} {'ok' if hit else 'MISS'}")
    return hits


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n", type=int, default=10_000, help="citing cases per run")
    ap.add_argument("--epochs", type=int, default=250)
    ap.add_argument("--learning-rate", type=float, default=0.15)
    args = ap.parse_args()

    config = RunConfig(learning_rate=args.learning_rate, epochs=args.epochs,
                       n_permutations=10)
    for asym, label in ((0.85, "argument-favoring"), (0.15, "fact-favoring")):
        print(f"{label} (info_asymmetry={asym}):")
        hits = sweep(asym, args.seeds, args.n, config)
        print(f"  -> {hits}/{args.seeds} runs recovered the ordering\n")


if __name__ == "__main__":
    main()
