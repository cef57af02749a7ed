"""Shared fixtures: a small, fully annotated article corpus."""

from __future__ import annotations

import pytest
import torch

from hopcheck import ArticleInstance, WordTokenizer, split_chains

torch.set_num_threads(1)


def make_articles() -> list[ArticleInstance]:
    """Four articles with entity-bearing sentences, mixed labels, and both
    single- and multi-chain annotation."""
    return [
        ArticleInstance(
            id="a1",
            claim="Governor Alice Brown cut school funding in Springfield",
            speaker="Bob Crane",
            label="false",
            sentences=(
                "Alice Brown signed the Springfield education bill in March.",
                "The bill increased school funding by ten percent.",
                "Critics in Riverton disagreed with the plan.",
                "A RAND report praised the Springfield schools.",
                "Weather in Springfield was mild that week.",
            ),
            evidence_chains=((0, 1),),
            split="train",
        ),
        ArticleInstance(
            id="a2",
            claim="Senator Dan Evans voted against the Harbor Act",
            speaker="Fay Green",
            label="half-true",
            sentences=(
                "Dan Evans missed the first Harbor Act vote.",
                "He later voted for the amended Harbor Act.",
                "The Harbor Act funds ports in Easton.",
                "Easton officials thanked Dan Evans.",
                "NASA had no comment on the Harbor Act.",
                "A local bakery opened near the harbor.",
            ),
            evidence_chains=((0, 1), (1, 2, 3)),
            split="train",
        ),
        ArticleInstance(
            id="a3",
            claim="Mayor Carla Diaz balanced the Lakeside budget",
            speaker="Hugh Ivan",
            label="true",
            sentences=(
                "Carla Diaz presented the Lakeside budget in June.",
                "Auditors confirmed the Lakeside budget had no deficit.",
                "The previous mayor left a large deficit.",
                "Lakeside parks stayed open all summer.",
            ),
            evidence_chains=((0, 1),),
            split="train",
        ),
        ArticleInstance(
            id="a4",
            claim="The Kern River dam was never inspected",
            speaker="Jo Kale",
            label="false",
            sentences=(
                "Inspectors visited the Kern River dam in April.",
                "Their report cleared the Kern River dam.",
                "The dam powers homes in Millbrook.",
                "Millbrook residents held a festival.",
                "An OSHA team reviewed the dam records.",
                "The Kern River is popular with anglers.",
                "Fishing permits rose last year.",
            ),
            evidence_chains=((0, 1), (0, 4)),
            split="dev",
        ),
    ]


@pytest.fixture
def articles() -> list[ArticleInstance]:
    return make_articles()


@pytest.fixture
def chains(articles):
    return split_chains(articles)


@pytest.fixture
def tokenizer(articles) -> WordTokenizer:
    texts = []
    for a in articles:
        texts.append(a.claim)
        texts.append(a.speaker)
        texts.extend(a.sentences)
    return WordTokenizer.from_texts(texts)
