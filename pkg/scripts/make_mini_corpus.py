#!/usr/bin/env python3
"""Regenerate the bundled 50-case miniature corpus (data/mini/).

Deterministic: fixed seed, fixed layout. The corpus exercises every
ingest path: heading extraction (including lowercase headings), missing
arguments sections (admitted with a warning), missing facts headings
(rejected), duplicate and unresolvable citations, citation-string
normalization, and one facts section longer than the 512-token budget.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "data" / "mini"

ARTICLES = ["2", "3", "5", "6", "8", "10", "13", "34", "P1-1"]

WORDS = (
    "the applicant court held that detention was unlawful under article "
    "convention state respondent government submitted complaint violation "
    "proceedings domestic remedy appeal judgment tribunal evidence witness "
    "police custody treatment sentence review lawful margin appreciation "
    "interference necessary democratic society proportionate legitimate aim"
).split()

N_CASES = 50
N_TRAIN, N_VAL = 40, 5


def words(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(n))


def make_records() -> list[dict]:
    rng = random.Random(20240917)
    ids = [f"mini-{i:03d}" for i in range(1, N_CASES + 1)]
    no_law = {"mini-021", "mini-034"}          # admitted, no argument material
    no_facts = {"mini-047", "mini-048"}        # rejected at parse time
    long_facts = {"mini-005"}                  # exceeds the 512-token budget

    records = []
    for idx, cid in enumerate(ids):
        n_facts = 600 if cid in long_facts else rng.randint(25, 90)
        facts = words(rng, n_facts)
        law = words(rng, rng.randint(20, 70))

        if cid in no_facts:
            body = f"PROCEDURE\n{words(rng, 10)}\nTHE LAW\n{law}\n"
        elif cid in no_law:
            body = f"PROCEDURE\n{words(rng, 10)}\nThe Facts\n{facts}\n"
        else:
            heading = "THE FACTS" if idx % 3 else "The Facts"
            body = f"PROCEDURE\n{words(rng, 10)}\n{heading}\n{facts}\nTHE LAW\n{law}\n"

        citations: list[str] = []
        if idx > 0:
            n_cit = rng.randint(0, 4) if idx < N_TRAIN else rng.randint(1, 4)
            for j in range(n_cit):
                kind = rng.random()
                force_resolvable = idx >= N_TRAIN and j == 0
                if kind < 0.62 or force_resolvable:
                    target = ids[rng.randrange(idx)]
                    while force_resolvable and target in no_facts:
                        target = ids[rng.randrange(idx)]
                    style = rng.random()
                    if style < 0.3:
                        target = target.upper()
                    elif style < 0.5:
                        target = f"  {target} "
                    citations.append(target)
                elif kind < 0.75 and citations:
                    citations.append(citations[0])      # duplicate
                else:
                    citations.append(f"ext-{rng.randint(100, 130)}")
        if cid == "mini-030":
            citations.append("mini-047")                # cites a rejected doc

        outcome = rng.sample(ARTICLES, k=rng.choice([0, 1, 1, 2, 2, 3]))
        split = "train" if idx < N_TRAIN else ("validation" if idx < N_TRAIN + N_VAL else "test")
        records.append({
            "id": cid,
            "body": body,
            "outcome": sorted(outcome),
            "citations": citations,
            "split": split,
        })
    return records


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    records = make_records()
    with open(OUT / "cases.jsonl", "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    (OUT / "articles.txt").write_text("\n".join(ARTICLES) + "\n", encoding="utf-8")
    print(f"wrote {len(records)} records to {OUT}")


if __name__ == "__main__":
    main()
