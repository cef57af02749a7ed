"""Random and TF-IDF + Naive Bayes baselines."""

import math
import random

import numpy as np
import pytest

from hopcheck import (
    LABELS,
    TfidfFeatureSpace,
    TfidfNaiveBayesModel,
    nb_train_predict,
    random_predict,
)
from hopcheck.baselines import claim_text, document_text


# ---------------------------------------------------------------------------
# random baseline


def test_random_predict_matches_draw_replay(articles):
    instance = articles[1]  # six sentences
    prediction = random_predict(instance, random.Random(5))
    replay = random.Random(5)
    label_index = replay.randrange(3)
    k = min(replay.randint(1, 10), 6)
    evidence = tuple(sorted(replay.sample(range(6), k)))
    assert prediction.label == LABELS[label_index]
    assert prediction.evidence == evidence


def test_random_predict_invariants(articles):
    rng = random.Random(123)
    instance = articles[3]  # seven sentences
    n = len(instance.sentences)
    for _ in range(300):
        p = random_predict(instance, rng)
        assert p.label in LABELS
        assert sorted(set(p.evidence)) == list(p.evidence)
        assert 1 <= len(p.evidence) <= min(10, n)
        assert all(0 <= i < n for i in p.evidence)
        assert p.importance == tuple(1.0 / n for _ in range(n))
        assert sorted(p.label_dist, reverse=True)[0] == 1.0
        assert sum(p.label_dist) == 1.0


def test_random_predict_k_capped_by_sentence_count(articles):
    instance = articles[2]  # four sentences
    rng = random.Random(0)
    sizes = {len(random_predict(instance, rng).evidence) for _ in range(500)}
    assert max(sizes) == 4
    assert min(sizes) == 1


def test_random_predict_deterministic(articles):
    a = random_predict(articles[0], random.Random(9))
    b = random_predict(articles[0], random.Random(9))
    assert a == b


def test_random_predict_rejects_empty():
    class Empty:
        sentences = ()

    with pytest.raises(ValueError):
        random_predict(Empty(), random.Random(0))


# ---------------------------------------------------------------------------
# feature space


def test_side_texts(articles):
    assert claim_text(articles[0]) == articles[0].claim
    assert document_text(articles[2]) == " ".join(articles[2].sentences)


def test_tfidf_hand_oracle():
    docs = ["alpha beta gamma", "alpha beta delta"]
    space = TfidfFeatureSpace().fit_texts(docs, docs)
    vec = space.vectorize("alpha beta gamma", "")
    claim_terms = sorted(
        space.claim_vectorizer.vocabulary_, key=space.claim_vectorizer.vocabulary_.get
    )
    assert claim_terms == [
        "alpha beta",
        "alpha beta delta",
        "alpha beta gamma",
        "beta delta",
        "beta gamma",
    ]
    idf_df2 = math.log(3 / 3) + 1  # appears in both documents
    idf_df1 = math.log(3 / 2) + 1
    raw = np.array([idf_df2, 0.0, idf_df1, 0.0, idf_df1])
    expected = raw / np.linalg.norm(raw)
    claim_side = vec[: len(claim_terms)]
    np.testing.assert_allclose(claim_side, expected, rtol=1e-12)
    # empty document side contributes a zero block
    assert not vec[len(claim_terms) :].any()


def test_tfidf_concatenation_order():
    space = TfidfFeatureSpace().fit_texts(["alpha beta gamma"], ["delta epsilon zeta"])
    vec = space.vectorize("alpha beta gamma", "delta epsilon zeta")
    n_claim = len(space.claim_vectorizer.vocabulary_)
    assert vec[:n_claim].any() and vec[n_claim:].any()
    claim_only = space.vectorize("alpha beta gamma", "")
    assert claim_only[:n_claim].any() and not claim_only[n_claim:].any()


def test_tfidf_stop_words_removed_before_ngrams():
    space = TfidfFeatureSpace().fit_texts(["alpha beta gamma"], ["alpha beta gamma"])
    with_stop = space.vectorize("alpha the beta of gamma", "x")
    without = space.vectorize("alpha beta gamma", "x")
    np.testing.assert_array_equal(with_stop, without)
    assert with_stop.any()


def test_tfidf_unknown_text_is_zero_vector():
    space = TfidfFeatureSpace().fit_texts(["alpha beta"], ["alpha beta"])
    assert not space.vectorize("omega psi chi", "omega psi chi").any()


def test_tfidf_round_trip_identical_vectors(tmp_path, articles):
    space = TfidfFeatureSpace().fit(articles)
    path = tmp_path / "space.json"
    space.save(path)
    loaded = TfidfFeatureSpace.load(path)
    assert loaded.ngram_range == space.ngram_range
    original = space.transform(articles).toarray()
    restored = loaded.transform(articles).toarray()
    np.testing.assert_array_equal(original, restored)


def test_tfidf_requires_fit():
    with pytest.raises(ValueError, match="not fitted"):
        TfidfFeatureSpace().vectorize("a b", "c d")
    with pytest.raises(ValueError, match="empty"):
        TfidfFeatureSpace().fit_texts([], [])


def test_tfidf_rejects_foreign_payload():
    with pytest.raises(ValueError):
        TfidfFeatureSpace.from_dict({"format": "something-else"})


# ---------------------------------------------------------------------------
# Naive Bayes


def test_nb_hand_posterior_oracle():
    # two features, one clean class each; smoothing alpha=1:
    # theta_false = (3/4, 1/4), theta_true = (1/4, 3/4), equal priors
    train = np.array([[2.0, 0.0], [0.0, 2.0]])
    predicted = nb_train_predict(train, ["false", "true"], np.array([[1.0, 0.0]]))
    assert predicted == ["false"]

    model = TfidfNaiveBayesModel()
    from sklearn.naive_bayes import MultinomialNB

    clf = MultinomialNB(alpha=1.0).fit(train, ["false", "true"])
    from hopcheck.baselines import _canonical_posterior

    posterior = _canonical_posterior(clf, np.array([[1.0, 0.0]]))[0]
    np.testing.assert_allclose(posterior, [0.75, 0.0, 0.25], atol=1e-12)
    del model


def test_nb_tie_breaks_in_canonical_order():
    train = np.array([[1.0, 0.0], [0.0, 1.0]])
    # the symmetric test point ties; earlier canonical label wins
    assert nb_train_predict(train, ["true", "false"], np.array([[1.0, 1.0]])) == ["false"]
    assert nb_train_predict(train, ["true", "half-true"], np.array([[1.0, 1.0]])) == ["half-true"]


def test_nb_single_class_predicts_that_class():
    train = np.array([[1.0, 2.0], [2.0, 1.0]])
    predicted = nb_train_predict(train, ["half-true", "half-true"], np.array([[5.0, 0.0]]))
    assert predicted == ["half-true"]


def test_nb_empty_training_rejected():
    with pytest.raises(ValueError):
        nb_train_predict(np.zeros((0, 2)), [], np.ones((1, 2)))


# ---------------------------------------------------------------------------
# end-to-end model


def test_model_fit_predict(articles):
    model = TfidfNaiveBayesModel().fit(articles)
    predicted = model.predict(articles)
    assert len(predicted) == len(articles)
    assert set(predicted) <= set(LABELS)
    proba = model.predict_proba(articles)
    np.testing.assert_allclose(proba.sum(axis=1), np.ones(len(articles)))


def test_model_predictions_shape(articles):
    model = TfidfNaiveBayesModel().fit(articles)
    for instance, prediction in zip(articles, model.predictions(articles)):
        n = len(instance.sentences)
        assert prediction.evidence == ()
        assert prediction.importance == tuple(1.0 / n for _ in range(n))
        assert math.isclose(sum(prediction.label_dist), 1.0)


def test_model_single_training_class(articles):
    train = [a for a in articles if a.label == "false"]
    model = TfidfNaiveBayesModel().fit(train)
    assert model.predict(articles) == ["false"] * len(articles)


def test_model_unfitted_errors(articles):
    with pytest.raises(ValueError, match="not fitted"):
        TfidfNaiveBayesModel().predict(articles)
    with pytest.raises(ValueError, match="empty"):
        TfidfNaiveBayesModel().fit([])
