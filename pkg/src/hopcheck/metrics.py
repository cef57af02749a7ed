"""Label, evidence and joint (FEVER-style) metrics with bucketed breakdowns.

Conventions: label macro-F1 averages per-class F1 over all three classes, a
class absent from both gold and predictions contributing 0. Evidence
precision/recall/F1 are computed per instance against the union of that
instance's gold chains and macro-averaged; an empty prediction scores
precision 0. The joint score counts an instance when the label is correct and
at least one full gold chain is contained in the predicted evidence set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import ArticleInstance, ChainInstance, LABELS
from .perturb import Recognizer, ne_overlap
from .prediction import select_evidence


@dataclass
class PredictionRecord:
    """One line of a predictions file: what the evaluator consumes."""

    instance_id: str
    label: str
    label_dist: tuple[float, ...]
    evidence: tuple[int, ...]
    importance: tuple[float, ...]

    def to_record(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "label": self.label,
            "label_dist": list(self.label_dist),
            "evidence": list(self.evidence),
            "importance": list(self.importance),
        }

    @classmethod
    def from_record(cls, record: dict) -> "PredictionRecord":
        return cls(
            instance_id=str(record["instance_id"]),
            label=str(record["label"]),
            label_dist=tuple(float(x) for x in record["label_dist"]),
            evidence=tuple(int(i) for i in record["evidence"]),
            importance=tuple(float(x) for x in record["importance"]),
        )


def save_predictions(predictions: Sequence[PredictionRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in predictions:
            f.write(json.dumps(p.to_record()) + "\n")


def load_predictions(path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(PredictionRecord.from_record(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# gold-side accessors working for both chain and article instances


def instance_key(instance: ArticleInstance | ChainInstance) -> str:
    """The identifier predictions are recorded under: the article id, or
    article:chain for chain instances."""
    if isinstance(instance, ChainInstance):
        return f"{instance.article_id}:{instance.chain_id}"
    return instance.id


def gold_label(instance: ArticleInstance | ChainInstance) -> str:
    return instance.label


def gold_chains(instance: ArticleInstance | ChainInstance) -> list[tuple[int, ...]]:
    if isinstance(instance, ChainInstance):
        return [tuple(sorted(instance.evidence))]
    return [tuple(c) for c in instance.evidence_chains]


def gold_evidence_union(instance: ArticleInstance | ChainInstance) -> frozenset[int]:
    return frozenset(i for chain in gold_chains(instance) for i in chain)


# ---------------------------------------------------------------------------
# core metrics


def label_metrics(predicted_labels: Sequence[str], gold_labels: Sequence[str]) -> tuple[float, float]:
    """(macro_f1, accuracy) over the fixed three-way label space."""
    if len(predicted_labels) != len(gold_labels):
        raise ValueError(
            f"got {len(predicted_labels)} predictions for {len(gold_labels)} gold labels"
        )
    if not gold_labels:
        raise ValueError("cannot score an empty label list")
    f1s = []
    for label in LABELS:
        tp = sum(1 for p, g in zip(predicted_labels, gold_labels) if p == label and g == label)
        fp = sum(1 for p, g in zip(predicted_labels, gold_labels) if p == label and g != label)
        fn = sum(1 for p, g in zip(predicted_labels, gold_labels) if p != label and g == label)
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    accuracy = sum(1 for p, g in zip(predicted_labels, gold_labels) if p == g) / len(gold_labels)
    return sum(f1s) / len(LABELS), accuracy


def instance_prf(predicted: Iterable[int], gold: Iterable[int]) -> tuple[float, float, float]:
    pred = set(predicted)
    gold_set = set(gold)
    hits = len(pred & gold_set)
    precision = hits / len(pred) if pred else 0.0
    recall = hits / len(gold_set) if gold_set else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evidence_metrics(
    predicted_sets: Sequence[Iterable[int]],
    gold_chain_lists: Sequence[Sequence[Sequence[int]]],
    k: int | None = None,
) -> tuple[float, float, float]:
    """(f1, precision, recall), macro-averaged over instances. The gold set of
    an instance is the union of its chains. `k` documents the selection
    budget the predicted sets were produced with; it does not change the
    computation."""
    del k
    if len(predicted_sets) != len(gold_chain_lists):
        raise ValueError("prediction / gold length mismatch")
    if not gold_chain_lists:
        raise ValueError("cannot score an empty dataset")
    ps, rs, f1s = [], [], []
    for pred, chains in zip(predicted_sets, gold_chain_lists):
        union = set(i for chain in chains for i in chain)
        p, r, f1 = instance_prf(pred, union)
        ps.append(p)
        rs.append(r)
        f1s.append(f1)
    n = len(gold_chain_lists)
    return sum(f1s) / n, sum(ps) / n, sum(rs) / n


def fever_score(
    predicted_labels: Sequence[str],
    predicted_sets: Sequence[Iterable[int]],
    gold_labels: Sequence[str],
    gold_chain_lists: Sequence[Sequence[Sequence[int]]],
) -> float:
    """Fraction of instances with a correct label and at least one full gold
    chain inside the predicted evidence set."""
    n = len(gold_labels)
    if not (len(predicted_labels) == len(predicted_sets) == len(gold_chain_lists) == n):
        raise ValueError("prediction / gold length mismatch")
    if n == 0:
        raise ValueError("cannot score an empty dataset")
    correct = 0
    for p_label, p_set, g_label, chains in zip(
        predicted_labels, predicted_sets, gold_labels, gold_chain_lists
    ):
        pred = set(p_set)
        if p_label == g_label and any(set(chain) <= pred for chain in chains):
            correct += 1
    return correct / n


# ---------------------------------------------------------------------------
# report assembly


@dataclass
class MetricsReport:
    label_macro_f1: float
    label_accuracy: float
    evidence_f1: float
    evidence_precision: float
    evidence_recall: float
    fever_score: float
    k: int
    count: int
    buckets: dict[str, "MetricsReport | None"] = field(default_factory=dict)
    bucket_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "label_macro_f1": self.label_macro_f1,
            "label_accuracy": self.label_accuracy,
            "evidence_f1": self.evidence_f1,
            "evidence_precision": self.evidence_precision,
            "evidence_recall": self.evidence_recall,
            "fever_score": self.fever_score,
            "k": self.k,
            "count": self.count,
        }
        if self.bucket_counts:
            d["buckets"] = {
                name: (report.to_dict() if report is not None else None)
                for name, report in self.buckets.items()
            }
            d["bucket_counts"] = dict(self.bucket_counts)
        return d


def compute_report(
    predictions: Sequence[PredictionRecord],
    instances: Sequence[ArticleInstance | ChainInstance],
    k: int,
) -> MetricsReport:
    if len(predictions) != len(instances):
        raise ValueError("prediction / instance length mismatch")
    pred_labels = [p.label for p in predictions]
    pred_sets = [p.evidence for p in predictions]
    golds = [gold_label(i) for i in instances]
    chains = [gold_chains(i) for i in instances]
    macro_f1, accuracy = label_metrics(pred_labels, golds)
    ev_f1, ev_p, ev_r = evidence_metrics(pred_sets, chains)
    joint = fever_score(pred_labels, pred_sets, golds, chains)
    return MetricsReport(
        label_macro_f1=macro_f1,
        label_accuracy=accuracy,
        evidence_f1=ev_f1,
        evidence_precision=ev_p,
        evidence_recall=ev_r,
        fever_score=joint,
        k=k,
        count=len(instances),
    )


def sweep_top_k(
    importances: Sequence[Sequence[float]],
    gold_chain_lists: Sequence[Sequence[Sequence[int]]],
    k_range: Iterable[int],
) -> list[dict]:
    """Re-select evidence at each k and recompute the evidence metrics."""
    rows = []
    for k in k_range:
        if not 1 <= k <= 10:
            raise ValueError(f"k must lie in [1, 10], got {k}")
        selected = [select_evidence(imp, k) for imp in importances]
        f1, p, r = evidence_metrics(selected, gold_chain_lists)
        rows.append({"k": k, "evidence_f1": f1, "evidence_precision": p, "evidence_recall": r})
    return rows


# ---------------------------------------------------------------------------
# bucketed breakdowns

BUCKET_RULES = ("chain_length", "ne_overlap", "confidence")


def _bucket_of(
    rule: str,
    prediction: PredictionRecord,
    instance: ArticleInstance | ChainInstance,
    recognizer: Recognizer | None,
) -> str:
    if rule == "chain_length":
        # for multi-chain articles bucket by the shortest sufficient chain
        length = min(len(c) for c in gold_chains(instance))
        return "1-2" if length <= 2 else "3+"
    if rule == "ne_overlap":
        evidence = gold_evidence_union(instance)
        evi = [s for i, s in enumerate(instance.sentences) if i in evidence]
        non = [s for i, s in enumerate(instance.sentences) if i not in evidence]
        value = ne_overlap(evi, non, recognizer=recognizer)
        return ">=40%" if value >= 0.40 else "<40%"
    if rule == "confidence":
        return ">=90%" if max(prediction.label_dist) >= 0.90 else "<90%"
    raise ValueError(f"unknown bucket rule {rule!r}; expected one of {BUCKET_RULES}")


_BUCKET_NAMES = {
    "chain_length": ("1-2", "3+"),
    "ne_overlap": ("<40%", ">=40%"),
    "confidence": ("<90%", ">=90%"),
}


def bucketed_report(
    predictions: Sequence[PredictionRecord],
    instances: Sequence[ArticleInstance | ChainInstance],
    rule: str,
    k: int,
    recognizer: Recognizer | None = None,
) -> MetricsReport:
    """Whole-set report with per-bucket sub-reports under the given rule.

    Empty buckets are reported with count 0 and a null report.
    """
    report = compute_report(predictions, instances, k)
    members: dict[str, list[int]] = {name: [] for name in _BUCKET_NAMES[rule]}
    for idx, (pred, inst) in enumerate(zip(predictions, instances)):
        members[_bucket_of(rule, pred, inst, recognizer)].append(idx)
    for name, idxs in members.items():
        report.bucket_counts[name] = len(idxs)
        if idxs:
            report.buckets[name] = compute_report(
                [predictions[i] for i in idxs], [instances[i] for i in idxs], k
            )
        else:
            report.buckets[name] = None
    return report


# ---------------------------------------------------------------------------
# hop-attention analysis

ATTENTION_GROUPS = ("evi->nonevi", "evi->evi", "nonevi->nonevi", "nonevi->evi")


def attention_ratio_samples(
    attention_matrices: Sequence[np.ndarray],
    evidence_masks: Sequence[Sequence[bool]],
) -> dict[str, list[float]]:
    """Per-edge attention ratios pooled over graphs, grouped by whether the
    source and target nodes are evidence.

    The ratio of an edge is its weight divided by the mean weight over all
    edges of its graph, so the mean ratio within one graph is exactly 1.
    """
    samples: dict[str, list[float]] = {g: [] for g in ATTENTION_GROUPS}
    for matrix, mask in zip(attention_matrices, evidence_masks):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"attention matrix must be square, got shape {a.shape}")
        if not np.allclose(a.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("attention matrix rows must sum to 1")
        m = np.asarray(mask, dtype=bool)
        if m.shape[0] != a.shape[0]:
            raise ValueError("evidence mask length does not match the attention matrix")
        ratios = a / a.mean()
        src = m[:, None]
        dst = m[None, :]
        samples["evi->evi"].extend(ratios[src & dst].tolist())
        samples["evi->nonevi"].extend(ratios[src & ~dst].tolist())
        samples["nonevi->evi"].extend(ratios[~src & dst].tolist())
        samples["nonevi->nonevi"].extend(ratios[~src & ~dst].tolist())
    return samples


def attention_ratios(
    attention_matrices: Sequence[np.ndarray],
    evidence_masks: Sequence[Sequence[bool]],
) -> dict[str, float]:
    """Mean edge-attention ratio per (source, target) evidence group; groups
    with no edges are reported as NaN."""
    samples = attention_ratio_samples(attention_matrices, evidence_masks)
    return {
        group: (float(np.mean(values)) if values else float("nan"))
        for group, values in samples.items()
    }
