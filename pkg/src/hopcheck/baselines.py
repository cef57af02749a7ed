"""Non-neural reference systems: uniform random prediction and TF-IDF
word n-gram features with multinomial Naive Bayes."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.naive_bayes import MultinomialNB

from .corpus import LABELS, ArticleInstance, ChainInstance
from .prediction import Prediction
from .resources import load_stopwords

Instance = ArticleInstance | ChainInstance

RANDOM_K_RANGE = (1, 10)
STOPWORDS_ID = "hopcheck-stopwords-v1"


def random_predict(instance: Instance, rng: random.Random) -> Prediction:
    """Uniform label guess plus k distinct uniformly drawn evidence indices,
    k ~ Uniform[1, 10] capped at the sentence count.

    Importance is uniform so downstream metric code needs no special
    casing; the label distribution is one-hot on the sampled label.
    """
    n = len(instance.sentences)
    if n < 1:
        raise ValueError("instance has no sentences")
    label_index = rng.randrange(len(LABELS))
    k = min(rng.randint(*RANDOM_K_RANGE), n)
    evidence = tuple(sorted(rng.sample(range(n), k)))
    return Prediction(
        label_dist=tuple(1.0 if i == label_index else 0.0 for i in range(len(LABELS))),
        importance=tuple(1.0 / n for _ in range(n)),
        evidence=evidence,
    )


# ---------------------------------------------------------------------------
# TF-IDF feature space


def claim_text(instance: Instance) -> str:
    return instance.claim


def document_text(instance: Instance) -> str:
    return " ".join(instance.sentences)


@dataclass
class TfidfFeatureSpace:
    """Word n-gram (n in [2, 3]) TF-IDF features with separate claim-side
    and document-side vocabularies; a (claim, document) pair maps to the
    concatenation of the two vectors.

    Stop words are removed before n-gram extraction. The idf formula is
    ln((1+D)/(1+df)) + 1 with L2 row normalization. Fitted state
    round-trips through a versioned JSON asset.
    """

    ngram_range: tuple[int, int] = (2, 3)
    stop_words_id: str = STOPWORDS_ID
    version: int = 1
    claim_vectorizer: TfidfVectorizer | None = field(default=None, repr=False)
    doc_vectorizer: TfidfVectorizer | None = field(default=None, repr=False)

    def _make_vectorizer(self) -> TfidfVectorizer:
        return TfidfVectorizer(
            ngram_range=tuple(self.ngram_range), stop_words=sorted(load_stopwords())
        )

    def fit_texts(self, claims: Sequence[str], documents: Sequence[str]) -> "TfidfFeatureSpace":
        if not claims or not documents:
            raise ValueError("cannot fit on empty training texts")
        self.claim_vectorizer = self._make_vectorizer().fit(claims)
        self.doc_vectorizer = self._make_vectorizer().fit(documents)
        return self

    def fit(self, instances: Sequence[Instance]) -> "TfidfFeatureSpace":
        return self.fit_texts(
            [claim_text(i) for i in instances], [document_text(i) for i in instances]
        )

    def _require_fitted(self) -> None:
        if self.claim_vectorizer is None or self.doc_vectorizer is None:
            raise ValueError("feature space is not fitted")

    @property
    def n_features(self) -> int:
        self._require_fitted()
        return len(self.claim_vectorizer.vocabulary_) + len(self.doc_vectorizer.vocabulary_)

    def transform_texts(
        self, claims: Sequence[str], documents: Sequence[str]
    ) -> sparse.csr_matrix:
        self._require_fitted()
        if len(claims) != len(documents):
            raise ValueError("claims and documents disagree in length")
        claim_part = self.claim_vectorizer.transform(claims)
        doc_part = self.doc_vectorizer.transform(documents)
        return sparse.hstack([claim_part, doc_part]).tocsr()

    def transform(self, instances: Sequence[Instance]) -> sparse.csr_matrix:
        return self.transform_texts(
            [claim_text(i) for i in instances], [document_text(i) for i in instances]
        )

    def vectorize(self, claim: str, document: str) -> np.ndarray:
        """Feature vector of one (claim, document) pair: claim-side slots
        first, then document-side. Unknown n-grams contribute nothing."""
        return self.transform_texts([claim], [document]).toarray().ravel()

    # -- persistence --------------------------------------------------------

    @staticmethod
    def _vectorizer_state(vec: TfidfVectorizer) -> dict:
        vocab = vec.vocabulary_
        terms = sorted(vocab, key=vocab.get)
        idf = vec.idf_
        return {"terms": terms, "idf": [float(idf[vocab[t]]) for t in terms]}

    def _restore_vectorizer(self, state: dict) -> TfidfVectorizer:
        vec = self._make_vectorizer()
        vec.vocabulary_ = {t: i for i, t in enumerate(state["terms"])}
        vec.idf_ = np.asarray(state["idf"], dtype=float)
        vec.fixed_vocabulary_ = False
        return vec

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "format": "hopcheck-tfidf-space",
            "version": self.version,
            "ngram_range": list(self.ngram_range),
            "stop_words_id": self.stop_words_id,
            "claim": self._vectorizer_state(self.claim_vectorizer),
            "doc": self._vectorizer_state(self.doc_vectorizer),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TfidfFeatureSpace":
        if payload.get("format") != "hopcheck-tfidf-space":
            raise ValueError("not a TF-IDF feature-space asset")
        space = cls(
            ngram_range=tuple(payload["ngram_range"]),
            stop_words_id=payload["stop_words_id"],
            version=payload["version"],
        )
        space.claim_vectorizer = space._restore_vectorizer(payload["claim"])
        space.doc_vectorizer = space._restore_vectorizer(payload["doc"])
        return space

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfFeatureSpace":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Naive Bayes


def nb_train_predict(
    train_vectors,
    train_labels: Sequence[str],
    test_vectors,
    alpha: float = 1.0,
) -> list[str]:
    """Multinomial Naive Bayes (additive smoothing alpha) fit on the
    training vectors; argmax posterior per test row with ties resolved in
    canonical label order (false < half-true < true)."""
    if len(train_labels) == 0:
        raise ValueError("empty training set")
    classifier = MultinomialNB(alpha=alpha)
    classifier.fit(train_vectors, list(train_labels))
    posterior = _canonical_posterior(classifier, test_vectors)
    return [LABELS[int(np.argmax(row))] for row in posterior]


def _canonical_posterior(classifier: MultinomialNB, vectors) -> np.ndarray:
    """Posterior columns reordered to the canonical label order; labels the
    classifier never saw get probability 0."""
    raw = classifier.predict_proba(vectors)
    classes = list(classifier.classes_)
    out = np.zeros((raw.shape[0], len(LABELS)))
    for column, label in enumerate(classes):
        out[:, LABELS.index(label)] = raw[:, column]
    return out


@dataclass
class TfidfNaiveBayesModel:
    """The TF-IDF + Naive Bayes baseline end to end: fit the feature space
    and classifier on training instances, predict labels for new ones.

    This baseline does not rank sentences, so its full predictions carry a
    uniform importance vector and no evidence selection.
    """

    feature_space: TfidfFeatureSpace = field(default_factory=TfidfFeatureSpace)
    alpha: float = 1.0
    classifier: MultinomialNB | None = field(default=None, repr=False)

    def fit(self, instances: Sequence[Instance]) -> "TfidfNaiveBayesModel":
        if not instances:
            raise ValueError("empty training set")
        self.feature_space.fit(instances)
        self.classifier = MultinomialNB(alpha=self.alpha)
        self.classifier.fit(self.feature_space.transform(instances), [i.label for i in instances])
        return self

    def predict_proba(self, instances: Sequence[Instance]) -> np.ndarray:
        if self.classifier is None:
            raise ValueError("model is not fitted")
        return _canonical_posterior(self.classifier, self.feature_space.transform(instances))

    def predict(self, instances: Sequence[Instance]) -> list[str]:
        return [LABELS[int(np.argmax(row))] for row in self.predict_proba(instances)]

    def predictions(self, instances: Sequence[Instance]) -> list[Prediction]:
        out = []
        for instance, row in zip(instances, self.predict_proba(instances)):
            n = len(instance.sentences)
            out.append(
                Prediction(
                    label_dist=tuple(float(v) for v in row),
                    importance=tuple(1.0 / n for _ in range(n)),
                    evidence=(),
                )
            )
        return out
