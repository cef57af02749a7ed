"""Estimator-style facades over the models and dataset perturbers.

These follow the familiar fit/predict/transform conventions: constructor
arguments are stored verbatim, fitting sets trailing-underscore
attributes, and `get_params`/`set_params` work for free. `score` returns
label macro-F1 (the headline metric here) rather than accuracy.
"""

from __future__ import annotations

import random
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .baselines import TfidfFeatureSpace, TfidfNaiveBayesModel, random_predict
from .corpus import LABELS, ArticleInstance, ChainInstance
from .perturb import (
    ReplacementPool,
    build_adversarial,
    build_even_split,
    derive_seed,
)
from .prediction import DEFAULT_TOP_K, Prediction
from .metrics import instance_key, label_metrics
from .training import DatasetSplits, ExperimentConfig, run_regime

Instance = ArticleInstance | ChainInstance


def validate_instances(X: Sequence[Instance]) -> list[Instance]:
    """Check that X is a non-empty sequence of valid instances."""
    items = list(X)
    if not items:
        raise ValueError("X must contain at least one instance")
    for position, item in enumerate(items):
        if not isinstance(item, (ArticleInstance, ChainInstance)):
            raise TypeError(
                f"X[{position}] is {type(item).__name__}, expected an article or chain instance"
            )
        problems = item.violations()
        if problems:
            raise ValueError(f"X[{position}] is invalid: {problems[0]}")
    return items


_instance_key = instance_key


def _gold_labels(X: Sequence[Instance], y) -> list[str]:
    if y is None:
        return [i.label for i in X]
    golds = list(y)
    if len(golds) != len(X):
        raise ValueError(f"y has {len(golds)} labels for {len(X)} instances")
    return golds


class _PredictorMixin:
    """Shared label/evidence accessors on top of a predictions() method."""

    def predict(self, X: Sequence[Instance]) -> np.ndarray:
        return np.array([p.label for p in self.predictions(X)], dtype=object)

    def predict_proba(self, X: Sequence[Instance]) -> np.ndarray:
        return np.array([list(p.label_dist) for p in self.predictions(X)], dtype=float)

    def predict_evidence(self, X: Sequence[Instance]) -> list[tuple[int, ...]]:
        return [p.evidence for p in self.predictions(X)]

    def score(self, X: Sequence[Instance], y=None) -> float:
        """Label macro-F1 against y, or the instances' own labels."""
        golds = _gold_labels(list(X), y)
        macro_f1, _ = label_metrics([p.label for p in self.predictions(X)], golds)
        return macro_f1


class ChainVerifier(_PredictorMixin, BaseEstimator):
    """The trainable verifier as a single-dataset estimator.

    `fit(X, dev=...)` trains for `epochs` epochs with per-epoch dev
    evaluation and keeps the best checkpoint (dev defaults to X). For
    multi-stage transfer regimes use `training.run_regime` directly or the
    command-line `train` command.
    """

    def __init__(
        self,
        epochs: int = 8,
        loss_mode: str = "joint",
        hops: int = 3,
        top_k: int = DEFAULT_TOP_K,
        seed: int = 42,
        learning_rate: float | None = None,
        backend: str = "tiny-trainable",
        sentence_id_mode: bool = False,
        hop_hidden: int = 64,
        attention_heads: int = 1,
        encoder_hidden: int = 32,
        encoder_layers: int = 2,
        encoder_heads: int = 2,
        max_node_len: int = 128,
        max_vocab: int | None = None,
    ) -> None:
        self.epochs = epochs
        self.loss_mode = loss_mode
        self.hops = hops
        self.top_k = top_k
        self.seed = seed
        self.learning_rate = learning_rate
        self.backend = backend
        self.sentence_id_mode = sentence_id_mode
        self.hop_hidden = hop_hidden
        self.attention_heads = attention_heads
        self.encoder_hidden = encoder_hidden
        self.encoder_layers = encoder_layers
        self.encoder_heads = encoder_heads
        self.max_node_len = max_node_len
        self.max_vocab = max_vocab

    def _experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            stages=(("train", self.epochs),),
            loss_mode=self.loss_mode,
            hops=self.hops,
            top_k=self.top_k,
            seed=self.seed,
            learning_rate=self.learning_rate,
            backend=self.backend,
            sentence_id_mode=self.sentence_id_mode,
            hop_hidden=self.hop_hidden,
            attention_heads=self.attention_heads,
            encoder_hidden=self.encoder_hidden,
            encoder_layers=self.encoder_layers,
            encoder_heads=self.encoder_heads,
            max_node_len=self.max_node_len,
            max_vocab=self.max_vocab,
        )

    def fit(self, X: Sequence[Instance], y=None, dev: Sequence[Instance] | None = None):
        train = validate_instances(X)
        dev_set = validate_instances(dev) if dev is not None else train
        result = run_regime(
            self._experiment_config(),
            {"train": DatasetSplits(train=tuple(train), dev=tuple(dev_set))},
        )
        self.model_ = result.model
        self.history_ = result.history
        self.best_record_ = result.best_record
        self.tokenizer_ = result.model.tokenizer
        self.classes_ = np.array(LABELS, dtype=object)
        return self

    def predictions(self, X: Sequence[Instance]) -> list[Prediction]:
        if not hasattr(self, "model_"):
            raise ValueError("this ChainVerifier is not fitted yet; call fit first")
        return [self.model_.predict(i, top_k=self.top_k) for i in validate_instances(X)]


class RandomBaseline(_PredictorMixin, BaseEstimator):
    """Uniform random labels and evidence; needs no training.

    Each instance gets its own seed mixed from `seed` and the instance
    identity, so predictions do not depend on dataset order.
    """

    def __init__(self, seed: int = 42) -> None:
        self.seed = seed

    def fit(self, X: Sequence[Instance] | None = None, y=None):
        self.classes_ = np.array(LABELS, dtype=object)
        return self

    def predictions(self, X: Sequence[Instance]) -> list[Prediction]:
        return [
            random_predict(i, random.Random(derive_seed(self.seed, _instance_key(i))))
            for i in validate_instances(X)
        ]


class TfidfNaiveBayes(_PredictorMixin, BaseEstimator):
    """TF-IDF n-gram features + multinomial Naive Bayes labels. This
    baseline predicts no evidence (its evidence sets are empty)."""

    def __init__(self, ngram_range: tuple[int, int] = (2, 3), alpha: float = 1.0) -> None:
        self.ngram_range = ngram_range
        self.alpha = alpha

    def fit(self, X: Sequence[Instance], y=None):
        train = validate_instances(X)
        self.model_ = TfidfNaiveBayesModel(
            feature_space=TfidfFeatureSpace(ngram_range=tuple(self.ngram_range)),
            alpha=self.alpha,
        ).fit(train)
        self.classes_ = np.array(LABELS, dtype=object)
        return self

    def predictions(self, X: Sequence[Instance]) -> list[Prediction]:
        if not hasattr(self, "model_"):
            raise ValueError("this TfidfNaiveBayes is not fitted yet; call fit first")
        return self.model_.predictions(validate_instances(X))


class EvenSplitTransformer(TransformerMixin, BaseEstimator):
    """Dataset transformer applying the even-split construction.

    For chain instances, `fit` records each article's full set of chains
    (in original-article coordinates) so the per-chain non-evidence cap
    can be computed; fit and transform therefore normally receive the same
    chain dataset.
    """

    def __init__(self, seed: int = 42) -> None:
        self.seed = seed

    def fit(self, X: Sequence[Instance], y=None):
        chains_by_article: dict[str, list[tuple[int, ...]]] = {}
        for instance in validate_instances(X):
            if isinstance(instance, ChainInstance):
                chains_by_article.setdefault(instance.article_id, []).append(
                    instance.evidence_original()
                )
        self.article_chains_ = chains_by_article
        return self

    def transform(self, X: Sequence[Instance]) -> list[Instance]:
        if not hasattr(self, "article_chains_"):
            raise ValueError("this EvenSplitTransformer is not fitted yet; call fit first")
        out = []
        for instance in validate_instances(X):
            siblings = None
            if isinstance(instance, ChainInstance):
                siblings = self.article_chains_.get(instance.article_id)
            out.append(
                build_even_split(
                    instance,
                    seed=derive_seed(self.seed, _instance_key(instance)),
                    article_chains=siblings,
                )
            )
        return out


class AdversarialTransformer(TransformerMixin, BaseEstimator):
    """Dataset transformer applying the adversarial substitution.

    Expects even-split instances. The replacement pool comes from the
    `pool` argument or, when omitted, is built at fit time from the
    fitted dataset's articles. Fallbacks taken per instance are collected
    in `fallbacks_` after each transform.
    """

    def __init__(self, pool: ReplacementPool | None = None, seed: int = 42, recognizer=None):
        self.pool = pool
        self.seed = seed
        self.recognizer = recognizer

    def fit(self, X: Sequence[Instance], y=None):
        if self.pool is not None:
            self.pool_ = self.pool
        else:
            self.pool_ = ReplacementPool.from_articles(
                validate_instances(X), recognizer=self.recognizer
            )
        return self

    def transform(self, X: Sequence[Instance]) -> list[Instance]:
        if not hasattr(self, "pool_"):
            raise ValueError("this AdversarialTransformer is not fitted yet; call fit first")
        out = []
        fallbacks = []
        for instance in validate_instances(X):
            adversarial, taken = build_adversarial(
                instance,
                self.pool_,
                seed=derive_seed(self.seed, _instance_key(instance)),
                recognizer=self.recognizer,
            )
            out.append(adversarial)
            fallbacks.extend(taken)
        self.fallbacks_ = fallbacks
        return out
