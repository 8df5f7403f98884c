import json
import random

import pytest

from precedent_scorer.data import BundleText


def synthetic_bundles(n: int, k: int = 2, seed: int = 0, variant: str = "halsbury"):
    """Hand-built bundle texts with marker-style and word tokens."""
    rng = random.Random(seed)
    words = [f"w{i}" for i in range(12)]
    bundles, gold = [], {}
    for i in range(n):
        outcome = [rng.randint(0, 1) for _ in range(k)]
        markers = "<outcome> " + " ".join(
            f"<viol:{j}>" for j, bit in enumerate(outcome) if bit
        )
        # evidence words correlate perfectly with the outcome bits
        evidence = " ".join(
            (f"pos{j}" if bit else f"neg{j}") for j, bit in enumerate(outcome)
        )
        facts = " ".join(rng.choices(words, k=6))
        bundles.append(BundleText(
            case_id=f"case{i:03d}",
            variant=variant,
            precedent_texts=(markers.strip(), evidence),
            facts_text=facts,
        ))
        gold[f"case{i:03d}"] = outcome
    return bundles, gold


def bundle_jsonl_record(b: BundleText) -> dict:
    segments = []
    pos = 0
    for text in b.precedent_texts:
        n = len(text.split())
        segments.append({"case_id": "prec-x", "kind": "arguments",
                         "span": [pos, pos + n], "text": text})
        pos += n
    n = len(b.facts_text.split())
    segments.append({"case_id": b.case_id, "kind": "facts",
                     "span": [pos, pos + n], "text": b.facts_text})
    return {
        "case_id": b.case_id,
        "variant": b.variant,
        "tokens": list(range(pos + n)),
        "text_segments": segments,
    }


@pytest.fixture
def bundle_file(tmp_path):
    def write(bundles, name="bundles.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as f:
            for b in bundles:
                f.write(json.dumps(bundle_jsonl_record(b), sort_keys=True) + "\n")
        return path
    return write
