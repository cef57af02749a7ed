"""Statistical analyses: Welch's t-test, corpus divergence and
inter-annotator agreement."""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from scipy.special import stdtr

from .resources import load_stopwords

_TOKEN = re.compile(r"\b\w\w+\b")


def welch_ttest(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float]:
    """Unequal-variance t statistic with Welch-Satterthwaite degrees of
    freedom and the two-sided p-value."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 observations")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        raise ValueError("both samples have zero variance")
    sa = va / a.size
    sb = vb / b.size
    t = (a.mean() - b.mean()) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return float(t), p


# ---------------------------------------------------------------------------
# corpus divergence


def unigram_counts(texts: Iterable[str], stop_words: frozenset[str] | None = None) -> Counter:
    """Case-folded unigram counts with stop words removed; tokens are word
    characters of length >= 2 (same tokenization as the TF-IDF baseline)."""
    stops = load_stopwords() if stop_words is None else stop_words
    counts: Counter = Counter()
    for text in texts:
        for token in _TOKEN.findall(text.casefold()):
            if token not in stops:
                counts[token] += 1
    return counts


def js_divergence(
    corpus_a: Iterable[str],
    corpus_b: Iterable[str],
    stop_words: frozenset[str] | None = None,
) -> float:
    """Jensen-Shannon divergence (base-2) between the unigram distributions
    of two corpora. Symmetric, in [0, 1], zero iff the distributions match."""
    counts_a = unigram_counts(corpus_a, stop_words)
    counts_b = unigram_counts(corpus_b, stop_words)
    if not counts_a or not counts_b:
        raise ValueError("a corpus is empty after preprocessing")
    vocab = sorted(set(counts_a) | set(counts_b))
    p = np.array([counts_a[w] for w in vocab], dtype=float)
    q = np.array([counts_b[w] for w in vocab], dtype=float)
    p /= p.sum()
    q /= q.sum()
    m = 0.5 * (p + q)

    def kl(x, y):
        mask = x > 0
        return float(np.sum(x[mask] * np.log2(x[mask] / y[mask])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


# ---------------------------------------------------------------------------
# inter-annotator agreement


def fleiss_kappa(codings: Sequence[Sequence]) -> float:
    """Fleiss' kappa for nominal codings, one row of rater codes per item.

    Requires the same number of raters on every item. Returns NaN when
    chance agreement is 1 (a single category everywhere).
    """
    if not codings:
        raise ValueError("no items")
    n_raters = len(codings[0])
    if n_raters < 2:
        raise ValueError("need at least 2 raters")
    if any(len(row) != n_raters for row in codings):
        raise ValueError("all items must have the same number of raters")
    categories = sorted({c for row in codings for c in row}, key=str)
    n_items = len(codings)
    table = np.zeros((n_items, len(categories)))
    index = {c: j for j, c in enumerate(categories)}
    for i, row in enumerate(codings):
        for code in row:
            table[i, index[code]] += 1
    p_i = (np.sum(table**2, axis=1) - n_raters) / (n_raters * (n_raters - 1))
    p_bar = float(np.mean(p_i))
    p_j = np.sum(table, axis=0) / (n_items * n_raters)
    p_e = float(np.sum(p_j**2))
    if p_e >= 1.0:
        return float("nan")
    return (p_bar - p_e) / (1.0 - p_e)


def krippendorff_alpha(codings: Sequence[Sequence]) -> float:
    """Krippendorff's alpha with the nominal difference function.

    Tolerates varying numbers of raters per item (items with fewer than two
    codes are ignored). Returns NaN when expected disagreement is 0.
    """
    rows = [list(row) for row in codings if len(row) >= 2]
    if not rows:
        raise ValueError("no items with at least two codes")
    n = sum(len(row) for row in rows)
    observed = 0.0
    for row in rows:
        counts = Counter(row)
        m = len(row)
        disagree = sum(
            counts[c] * counts[d] for c in counts for d in counts if c != d
        )
        observed += disagree / (m - 1)
    observed /= n
    pooled = Counter(c for row in rows for c in row)
    expected = sum(
        pooled[c] * pooled[d] for c in pooled for d in pooled if c != d
    ) / (n * (n - 1))
    if expected == 0.0:
        return float("nan")
    return 1.0 - observed / expected


def agreement_labels(codings: Sequence[Sequence]) -> tuple[float, float]:
    """(fleiss_kappa, krippendorff_alpha) over per-item rater codings."""
    return fleiss_kappa(codings), krippendorff_alpha(codings)


def agreement_sentences(
    articles: Sequence[tuple[int, Sequence[Iterable[int]]]],
) -> tuple[float, float]:
    """Sentence-selection agreement: each article is scored as its own
    dataset of binary evidence/non-evidence codings (one item per sentence)
    and the two measures are averaged over articles.

    `articles` holds (sentence_count, per-rater evidence index sets).
    Articles where a measure is undefined are left out of its average.
    """
    if not articles:
        raise ValueError("no articles")
    kappas = []
    alphas = []
    for sentence_count, rater_sets in articles:
        sets = [set(s) for s in rater_sets]
        codings = [
            [1 if i in chosen else 0 for chosen in sets] for i in range(sentence_count)
        ]
        k = fleiss_kappa(codings)
        a = krippendorff_alpha(codings)
        if not math.isnan(k):
            kappas.append(k)
        if not math.isnan(a):
            alphas.append(a)
    kappa = float(np.mean(kappas)) if kappas else float("nan")
    alpha = float(np.mean(alphas)) if alphas else float("nan")
    return kappa, alpha


def agreement(data, mode: str = "label") -> tuple[float, float]:
    """Dispatch to label-level or sentence-level agreement."""
    if mode == "label":
        return agreement_labels(data)
    if mode == "sentence":
        return agreement_sentences(data)
    raise ValueError(f"unknown agreement mode {mode!r}; expected 'label' or 'sentence'")
