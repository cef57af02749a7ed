"""Canonical corpus model: validation, IO round-trips, chain splitting,
dev splitting, and statistics."""

import dataclasses
import json

import pytest

from hopcheck import (
    ArticleInstance,
    ChainInstance,
    CorpusError,
    ParseError,
    ValidationError,
    compute_stats,
    load_canonical,
    load_records,
    make_dev_split,
    save_canonical,
    save_records,
    split_chains,
    validate_dataset,
)
from hopcheck.corpus import CANONICAL_FIELDS, normalize_chain


def test_normalize_chain_sorts_and_dedupes():
    assert normalize_chain([3, 1, 3, 0]) == (0, 1, 3)
    assert normalize_chain(()) == ()


def test_valid_article_has_no_violations(articles):
    for a in articles:
        assert a.violations() == []


def test_violations_bad_label(articles):
    bad = dataclasses.replace(articles[0], label="pants-fire")
    assert any("label" in v for v in bad.violations())


def test_violations_chain_out_of_range(articles):
    bad = dataclasses.replace(articles[0], evidence_chains=((0, 99),))
    assert any("99" in v for v in bad.violations())


def test_violations_empty_sentences(articles):
    bad = dataclasses.replace(articles[0], sentences=(), evidence_chains=())
    assert bad.violations()


def test_violations_bad_split(articles):
    bad = dataclasses.replace(articles[0], split="holdout")
    assert any("split" in v for v in bad.violations())


def test_evidence_union(articles):
    assert articles[1].evidence_union() == frozenset({0, 1, 2, 3})


def test_canonical_round_trip(tmp_path, articles):
    path = tmp_path / "data.jsonl"
    save_canonical(articles, path)
    loaded = load_canonical(path)
    assert loaded == articles


def test_canonical_records_have_exactly_the_contract_fields(tmp_path, articles):
    path = tmp_path / "data.jsonl"
    save_canonical(articles, path)
    for line in path.read_text().splitlines():
        assert set(json.loads(line)) == set(CANONICAL_FIELDS)


def test_load_canonical_names_bad_json_line(tmp_path, articles):
    path = tmp_path / "bad.jsonl"
    save_canonical(articles[:1], path)
    path.write_text(path.read_text() + "not json\n")
    with pytest.raises(ParseError, match="line 2"):
        load_canonical(path)


def test_load_canonical_rejects_invalid_instance(tmp_path, articles):
    path = tmp_path / "bad.jsonl"
    record = {
        "id": "z9",
        "claim": "c",
        "speaker": "s",
        "label": "mostly-false",
        "sentences": ["one sentence"],
        "evidence_chains": [[0]],
        "split": "train",
    }
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ValidationError, match="z9"):
        load_canonical(path)


def test_save_records_mixed_round_trip(tmp_path, articles, chains):
    path = tmp_path / "mixed.jsonl"
    mixed = [articles[0], chains[1], articles[2]]
    save_records(mixed, path)
    loaded = load_records(path)
    assert len(loaded) == 3
    assert isinstance(loaded[0], ArticleInstance)
    assert isinstance(loaded[1], ChainInstance)
    assert loaded[1].evidence == chains[1].evidence


def test_validate_dataset_flags_duplicate_ids(articles):
    duplicated = articles + [articles[0]]
    problems = validate_dataset(duplicated)
    assert any("a1" in p for p in problems)
    assert validate_dataset(articles) == []


# ---------------------------------------------------------------------------
# chain splitting


def test_split_chains_one_instance_per_chain(articles, chains):
    expected = sum(len(a.evidence_chains) for a in articles)
    assert len(chains) == expected == 6


def test_split_chain_instances_keep_the_full_article(articles, chains):
    for chain in chains:
        source = next(a for a in articles if a.id == chain.article_id)
        assert chain.sentences == source.sentences
        assert chain.label == source.label
        assert chain.claim == source.claim
        assert chain.speaker == source.speaker
        # identity origin map on an unperturbed split
        assert chain.evidence_original() == tuple(sorted(chain.evidence))


def test_split_chains_chain_ids_enumerate_chains(chains):
    by_article = {}
    for chain in chains:
        by_article.setdefault(chain.article_id, []).append(chain.chain_id)
    for ids in by_article.values():
        assert ids == list(range(len(ids)))


def test_split_chains_matches_annotated_chains(articles, chains):
    a2 = [c for c in chains if c.article_id == "a2"]
    assert {frozenset(c.evidence) for c in a2} == {frozenset({0, 1}), frozenset({1, 2, 3})}


# ---------------------------------------------------------------------------
# dev split


def test_make_dev_split_groups_articles(chains):
    train, dev = make_dev_split(chains, 2, seed=42)
    assert len(dev) == 2
    assert len(train) == len(chains) - 2
    train_articles = {c.article_id for c in train}
    dev_articles = {c.article_id for c in dev}
    assert not train_articles & dev_articles


def test_make_dev_split_deterministic(chains):
    first = make_dev_split(chains, 2, seed=7)
    second = make_dev_split(chains, 2, seed=7)
    assert first == second


def test_make_dev_split_impossible_size(articles):
    two_chain_articles = [
        a for a in articles for _ in [0] if len(a.evidence_chains) == 2
    ]
    chains = split_chains(two_chain_articles)
    with pytest.raises(CorpusError, match="no article-grouped split"):
        make_dev_split(chains, 1, seed=0)


def test_make_dev_split_rejects_oversized_dev(chains):
    with pytest.raises(CorpusError):
        make_dev_split(chains, len(chains), seed=0)


# ---------------------------------------------------------------------------
# statistics


def test_compute_stats_counts(articles):
    report = compute_stats(articles)
    assert report.article_count == 4
    assert report.chain_count == 6
    assert report.label_counts == {"false": 2, "half-true": 1, "true": 1}


def test_compute_stats_means(articles):
    report = compute_stats(articles)
    assert report.sentences_per_article.mean == pytest.approx((5 + 6 + 4 + 7) / 4)
    assert report.chains_per_article.mean == pytest.approx(6 / 4)
    # evidence union sizes: a1 2, a2 4, a3 2, a4 3
    assert report.evidence_per_article.mean == pytest.approx((2 + 4 + 2 + 3) / 4)


def test_compute_stats_population_sd():
    articles = [
        ArticleInstance(
            id=f"s{n}",
            claim="c",
            speaker="s",
            label="true",
            sentences=tuple(f"word {i}" for i in range(n)),
            evidence_chains=((0,),),
            split="train",
        )
        for n in (2, 4)
    ]
    report = compute_stats(articles)
    assert report.sentences_per_article.mean == pytest.approx(3.0)
    assert report.sentences_per_article.sd == pytest.approx(1.0)  # population, not sample


def test_compute_stats_histogram_percentages(articles):
    report = compute_stats(articles)
    # chain lengths: 2, 2, 3, 2, 2, 2 -> "2": 5/6, "3": 1/6 (percent)
    assert report.chain_length_histogram["2"] == pytest.approx(100 * 5 / 6)
    assert report.chain_length_histogram["3"] == pytest.approx(100 * 1 / 6)
    assert report.chain_length_histogram["1"] == 0.0
    assert sum(report.chain_length_histogram.values()) == pytest.approx(100.0)


def test_compute_stats_empty_errors():
    with pytest.raises(CorpusError):
        compute_stats([])
