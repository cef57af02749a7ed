"""Canonical data model for claim/article/evidence-chain datasets.

The canonical on-disk format is UTF-8 JSON lines, one article per line, with
exactly the fields {id, claim, speaker, label, sentences, evidence_chains,
split}. Everything downstream (perturbation, training, evaluation) consumes
this one schema; source-specific formats are translated by `hopcheck.adapters`.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

LABELS = ("false", "half-true", "true")
SPLITS = ("train", "dev", "test")

CANONICAL_FIELDS = ("id", "claim", "speaker", "label", "sentences", "evidence_chains", "split")


class CorpusError(Exception):
    """Base error for dataset loading and validation."""


class ParseError(CorpusError):
    """A record could not be parsed; the message names the offending line."""


class ValidationError(CorpusError):
    """A parsed record violates an invariant; the message names the instance."""


def normalize_chain(indices: Iterable[int]) -> tuple[int, ...]:
    """Return a chain as a strictly increasing, duplicate-free index tuple."""
    return tuple(sorted(set(int(i) for i in indices)))


@dataclass(frozen=True)
class ArticleInstance:
    """One claim with speaker, veracity label, article sentences and annotated
    evidence chains. Chains index into `sentences` (0-based) and are stored in
    strictly increasing order.

    `origin_map` is only set on perturbed copies and maps each retained
    sentence position back to the position in the unperturbed article.
    """

    id: str
    claim: str
    speaker: str
    label: str
    sentences: tuple[str, ...]
    evidence_chains: tuple[tuple[int, ...], ...]
    split: str
    origin_map: tuple[int, ...] | None = None

    def violations(self) -> list[str]:
        """All invariant violations of this instance, as human-readable rules."""
        out = []
        if not self.id:
            out.append(f"instance {self.id!r}: empty id")
        if self.label not in LABELS:
            out.append(f"instance {self.id!r}: unknown label {self.label!r}")
        if self.split not in SPLITS:
            out.append(f"instance {self.id!r}: unknown split {self.split!r}")
        if not self.evidence_chains:
            out.append(f"instance {self.id!r}: no evidence chains")
        n = len(self.sentences)
        for ci, chain in enumerate(self.evidence_chains):
            if not chain:
                out.append(f"instance {self.id!r}: chain {ci} is empty")
                continue
            if len(set(chain)) != len(chain):
                out.append(f"instance {self.id!r}: chain {ci} has duplicate indices")
            elif any(b <= a for a, b in zip(chain, chain[1:])):
                out.append(f"instance {self.id!r}: chain {ci} is not strictly increasing")
            bad = [i for i in chain if i < 0 or i >= n]
            if bad:
                out.append(
                    f"instance {self.id!r}: chain {ci} index {bad[0]} out of range "
                    f"for {n} sentences"
                )
        if self.origin_map is not None and len(self.origin_map) != n:
            out.append(f"instance {self.id!r}: origin_map length mismatch")
        return out

    def evidence_union(self) -> frozenset[int]:
        """Union of all annotated chains of this article."""
        return frozenset(i for chain in self.evidence_chains for i in chain)


@dataclass(frozen=True)
class ChainInstance:
    """A training unit: one article restricted to a single evidence chain.

    `origin_map[i]` gives the original article index of retained sentence i, so
    `evidence` (retained-coordinate indices) can be compared against the source
    article's annotation.
    """

    article_id: str
    chain_id: int
    claim: str
    speaker: str
    label: str
    sentences: tuple[str, ...]
    evidence: frozenset[int]
    origin_map: tuple[int, ...]

    def violations(self) -> list[str]:
        name = f"{self.article_id}/{self.chain_id}"
        out = []
        if self.label not in LABELS:
            out.append(f"chain {name}: unknown label {self.label!r}")
        n = len(self.sentences)
        if len(self.origin_map) != n:
            out.append(f"chain {name}: origin_map length {len(self.origin_map)} != {n} sentences")
        if len(set(self.origin_map)) != len(self.origin_map):
            out.append(f"chain {name}: origin_map is not injective")
        if not self.evidence:
            out.append(f"chain {name}: empty evidence")
        bad = [i for i in self.evidence if i < 0 or i >= n]
        if bad:
            out.append(f"chain {name}: evidence index {bad[0]} out of range")
        return out

    def evidence_original(self) -> tuple[int, ...]:
        """The evidence chain expressed in original article coordinates."""
        return tuple(sorted(self.origin_map[i] for i in self.evidence))


@dataclass(frozen=True)
class MeanSd:
    mean: float
    sd: float


CHAIN_LENGTH_BUCKETS = ("1", "2", "3", "4", "5", "6+")


@dataclass(frozen=True)
class StatsReport:
    """Dataset statistics: per-article means/SDs, label counts and the
    chain-length histogram (percentages over all chains)."""

    words_per_article: MeanSd
    sentences_per_article: MeanSd
    evidence_per_article: MeanSd
    evidence_per_chain: MeanSd
    chains_per_article: MeanSd
    label_counts: dict[str, int]
    chain_length_histogram: dict[str, float]
    article_count: int
    chain_count: int

    def to_dict(self) -> dict:
        d = {
            "article_count": self.article_count,
            "chain_count": self.chain_count,
            "label_counts": dict(self.label_counts),
            "chain_length_histogram": dict(self.chain_length_histogram),
        }
        for name in (
            "words_per_article",
            "sentences_per_article",
            "evidence_per_article",
            "evidence_per_chain",
            "chains_per_article",
        ):
            ms = getattr(self, name)
            d[name] = {"mean": ms.mean, "sd": ms.sd}
        return d


# ---------------------------------------------------------------------------
# canonical file IO


def article_to_record(instance: ArticleInstance) -> dict:
    return {
        "id": instance.id,
        "claim": instance.claim,
        "speaker": instance.speaker,
        "label": instance.label,
        "sentences": list(instance.sentences),
        "evidence_chains": [list(c) for c in instance.evidence_chains],
        "split": instance.split,
    }


def article_from_record(record: dict, where: str = "record") -> ArticleInstance:
    missing = [f for f in CANONICAL_FIELDS if f not in record]
    if missing:
        raise ParseError(f"{where}: missing fields {missing}")
    try:
        return ArticleInstance(
            id=str(record["id"]),
            claim=str(record["claim"]),
            speaker=str(record["speaker"]),
            label=str(record["label"]),
            sentences=tuple(str(s) for s in record["sentences"]),
            evidence_chains=tuple(tuple(int(i) for i in c) for c in record["evidence_chains"]),
            split=str(record["split"]),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: malformed field value ({exc})") from exc


def load_canonical(path) -> list[ArticleInstance]:
    """Load a canonical JSONL dataset, preserving file order.

    Raises ParseError (naming the line) for malformed lines and
    ValidationError (naming the instance) for invariant violations.
    """
    instances = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}, line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ParseError(f"{path}, line {lineno}: record is not an object")
            instance = article_from_record(record, where=f"{path}, line {lineno}")
            problems = instance.violations()
            if problems:
                raise ValidationError(problems[0])
            instances.append(instance)
    return instances


def save_canonical(instances: Sequence[ArticleInstance], path) -> None:
    """Write instances as canonical JSONL (exactly the seven canonical fields)."""
    with open(path, "w", encoding="utf-8") as f:
        for instance in instances:
            f.write(json.dumps(article_to_record(instance), ensure_ascii=False) + "\n")


def chain_to_record(chain: ChainInstance) -> dict:
    return {
        "article_id": chain.article_id,
        "chain_id": chain.chain_id,
        "claim": chain.claim,
        "speaker": chain.speaker,
        "label": chain.label,
        "sentences": list(chain.sentences),
        "evidence": sorted(chain.evidence),
        "origin_map": list(chain.origin_map),
    }


def chain_from_record(record: dict, where: str = "record") -> ChainInstance:
    try:
        return ChainInstance(
            article_id=str(record["article_id"]),
            chain_id=int(record["chain_id"]),
            claim=str(record["claim"]),
            speaker=str(record["speaker"]),
            label=str(record["label"]),
            sentences=tuple(str(s) for s in record["sentences"]),
            evidence=frozenset(int(i) for i in record["evidence"]),
            origin_map=tuple(int(i) for i in record["origin_map"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: malformed chain record ({exc})") from exc


def save_records(instances: Sequence[ArticleInstance | ChainInstance], path) -> None:
    """Write a mixed sequence of article and chain instances as JSONL."""
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            if isinstance(inst, ChainInstance):
                record = chain_to_record(inst)
            else:
                record = article_to_record(inst)
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_records(path) -> list[ArticleInstance | ChainInstance]:
    """Load a JSONL file of article and/or chain records (self-describing)."""
    out: list[ArticleInstance | ChainInstance] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}, line {lineno}: invalid JSON ({exc.msg})") from exc
            where = f"{path}, line {lineno}"
            if "chain_id" in record:
                out.append(chain_from_record(record, where=where))
            else:
                out.append(article_from_record(record, where=where))
    return out


# ---------------------------------------------------------------------------
# dataset operations


def validate_dataset(instances: Sequence[ArticleInstance | ChainInstance]) -> list[str]:
    """Collect invariant violations across a dataset; empty means all valid.

    Besides per-instance checks this flags duplicate identifiers (article id,
    or article id + chain id for chain instances).
    """
    out = []
    seen: set[tuple] = set()
    for inst in instances:
        out.extend(inst.violations())
        key = (
            ("chain", inst.article_id, inst.chain_id)
            if isinstance(inst, ChainInstance)
            else ("article", inst.id)
        )
        if key in seen:
            out.append(f"duplicate instance identifier {':'.join(str(k) for k in key[1:])}")
        seen.add(key)
    return out


def split_chains(articles: Sequence[ArticleInstance]) -> list[ChainInstance]:
    """Turn each article with m chains into m chain instances.

    All article sentences are retained (dropping sentences is the perturbation
    module's job); chain i becomes the evidence set of instance i.
    """
    problems = validate_dataset(articles)
    if problems:
        raise ValidationError(problems[0])
    out = []
    for article in articles:
        identity = tuple(range(len(article.sentences)))
        for ci, chain in enumerate(article.evidence_chains):
            out.append(
                ChainInstance(
                    article_id=article.id,
                    chain_id=ci,
                    claim=article.claim,
                    speaker=article.speaker,
                    label=article.label,
                    sentences=article.sentences,
                    evidence=frozenset(chain),
                    origin_map=identity,
                )
            )
    return out


def make_dev_split(
    chains: Sequence[ChainInstance], dev_count: int, seed: int
) -> tuple[list[ChainInstance], list[ChainInstance]]:
    """Partition chain instances into (train, dev) of sizes (n - dev_count,
    dev_count), keeping all chains of one article on the same side.

    Deterministic for a given seed. Raises CorpusError when dev_count is not
    smaller than the total or no article grouping can hit dev_count exactly.
    """
    total = len(chains)
    if dev_count >= total:
        raise CorpusError(f"dev_count {dev_count} must be smaller than the total {total}")
    if dev_count < 0:
        raise CorpusError("dev_count must be non-negative")

    groups: dict[str, int] = {}
    for chain in chains:
        groups[chain.article_id] = groups.get(chain.article_id, 0) + 1
    ids = list(groups)
    rng = random.Random(seed)
    rng.shuffle(ids)
    counts = [groups[a] for a in ids]

    # reach[i] bit t set <=> some subset of articles i.. sums to t
    m = len(ids)
    reach = [0] * (m + 1)
    reach[m] = 1
    for i in range(m - 1, -1, -1):
        reach[i] = reach[i + 1] | (reach[i + 1] << counts[i])
    if not (reach[0] >> dev_count) & 1:
        raise CorpusError(
            f"no article-grouped split of size {dev_count} exists for these chain counts"
        )
    chosen: set[str] = set()
    remaining = dev_count
    for i in range(m):
        take = counts[i] <= remaining and (reach[i + 1] >> (remaining - counts[i])) & 1
        if take:
            chosen.add(ids[i])
            remaining -= counts[i]
    train = [c for c in chains if c.article_id not in chosen]
    dev = [c for c in chains if c.article_id in chosen]
    return train, dev


def _mean_sd(values: Sequence[float]) -> MeanSd:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return MeanSd(mean=mean, sd=var**0.5)


def compute_stats(articles: Sequence[ArticleInstance]) -> StatsReport:
    """Dataset statistics over articles (means/SDs) and chains (histogram)."""
    if not articles:
        raise CorpusError("cannot compute statistics of an empty dataset")

    words = [sum(len(s.split()) for s in a.sentences) for a in articles]
    sent_counts = [len(a.sentences) for a in articles]
    evidence_counts = [len(a.evidence_union()) for a in articles]
    chain_counts = [len(a.evidence_chains) for a in articles]
    chain_lengths = [len(c) for a in articles for c in a.evidence_chains]

    label_counts = {label: 0 for label in LABELS}
    for a in articles:
        label_counts[a.label] += 1

    histogram = {bucket: 0 for bucket in CHAIN_LENGTH_BUCKETS}
    for length in chain_lengths:
        bucket = str(length) if length <= 5 else "6+"
        histogram[bucket] += 1
    total_chains = len(chain_lengths)
    percentages = {b: 100.0 * c / total_chains for b, c in histogram.items()}

    return StatsReport(
        words_per_article=_mean_sd(words),
        sentences_per_article=_mean_sd(sent_counts),
        evidence_per_article=_mean_sd(evidence_counts),
        evidence_per_chain=_mean_sd(chain_lengths),
        chains_per_article=_mean_sd(chain_counts),
        label_counts=label_counts,
        chain_length_histogram=percentages,
        article_count=len(articles),
        chain_count=total_chains,
    )
