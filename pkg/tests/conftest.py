import random
from pathlib import Path

import pytest

from precedent_mi.bundles import Tokenizer, build_tokenizer
from precedent_mi.corpus import ArticleSet, Case, Split

DATA_DIR = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def articles2() -> ArticleSet:
    return ArticleSet(("2", "3"))


@pytest.fixture
def mini_corpus_dir() -> Path:
    return DATA_DIR / "mini"


def make_case(
    cid: str = "c1",
    facts: str = "some facts text",
    arguments: str = "some argument text",
    outcome=(0, 0),
    cited=(),
    split: Split = Split.TRAIN,
) -> Case:
    return Case(id=cid, facts=facts, arguments=arguments, outcome=tuple(outcome),
                cited_ids=tuple(cited), split=split)


def numbered_text(prefix: str, n: int) -> str:
    """n distinct words, so token positions are identifiable."""
    return " ".join(f"{prefix}{i}" for i in range(n))


def tokenizer_for(cases, articles: ArticleSet, min_freq: int = 1) -> Tokenizer:
    return build_tokenizer(cases, articles, min_freq=min_freq)


def random_corpus(rng: random.Random, articles: ArticleSet, n_cases: int = 12):
    """Small random corpus where later cases cite earlier ones."""
    vocab = [f"w{i}" for i in range(30)]
    cases = []
    for i in range(n_cases):
        cid = f"r{i:03d}"
        facts = " ".join(rng.choices(vocab, k=rng.randint(1, 60)))
        arguments = " ".join(rng.choices(vocab, k=rng.randint(0, 60)))
        outcome = tuple(rng.randint(0, 1) for _ in range(len(articles)))
        n_cit = rng.randint(0, min(3, i))
        cited = tuple(rng.sample([f"r{j:03d}" for j in range(i)], k=n_cit)) if n_cit else ()
        split = rng.choice(list(Split))
        cases.append(Case(id=cid, facts=facts, arguments=arguments, outcome=outcome,
                          cited_ids=cited, split=split))
    return cases
