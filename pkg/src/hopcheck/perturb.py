"""Even-split and adversarial dataset construction.

The even split keeps every evidence sentence and caps the number of
non-evidence sentences; the adversarial split then swaps each surviving
non-evidence sentence for a foreign sentence that shares at least one named
entity with the evidence. Both builders are deterministic functions of
(input, seed).

Named-entity recognition is pluggable: any callable mapping text to a set of
normalized entity strings works. The built-in fallback recognizer needs no
model or downloads: it collects maximal capitalized token spans (ignoring
sentence-initial capitalization) plus all-caps tokens of length >= 2.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from .corpus import ArticleInstance, ChainInstance, CorpusError

logger = logging.getLogger(__name__)

Recognizer = Callable[[str], frozenset[str]]


def derive_seed(base_seed: int, *parts: str) -> int:
    """A per-item seed mixed from a base seed and identity strings, so
    perturbing a dataset is independent of iteration order."""
    digest = hashlib.sha256("|".join([str(base_seed), *parts]).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def normalize_entity(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip()).casefold()


_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")
_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)


class CapitalizationRecognizer:
    """Fallback NER: capitalized token spans plus all-caps tokens.

    A token is span-eligible when its first character is uppercase and it is
    not the first token of its sentence (sentence-initial capitalization says
    nothing about namehood). Punctuation breaks a span, so "Wuhan, China"
    yields two entities, not one. All-caps tokens of length >= 2 count
    everywhere. Entities are casefolded with whitespace collapsed.
    """

    def __call__(self, text: str) -> frozenset[str]:
        entities: set[str] = set()
        for sentence in _SENTENCE_BOUNDARY.split(text):
            tokens = []
            for chunk in sentence.split():
                core = _EDGE_PUNCT.sub("", chunk)
                if not core:
                    if tokens:
                        tokens[-1] = (tokens[-1][0], True)
                    continue
                leading = chunk[0] != core[0]
                trailing = chunk[-1] != core[-1]
                if leading and tokens:
                    tokens[-1] = (tokens[-1][0], True)
                tokens.append((core, trailing))
            span: list[str] = []
            for position, (core, breaks_after) in enumerate(tokens):
                all_caps = len(core) >= 2 and core.isupper()
                if all_caps:
                    entities.add(normalize_entity(core))
                eligible = core[0].isupper() and (position > 0 or all_caps)
                if eligible:
                    span.append(core)
                if not eligible or breaks_after:
                    if span:
                        entities.add(normalize_entity(" ".join(span)))
                    span = []
            if span:
                entities.add(normalize_entity(" ".join(span)))
        entities.discard("")
        return frozenset(entities)


DEFAULT_RECOGNIZER = CapitalizationRecognizer()


def extract_named_entities(text: str, recognizer: Recognizer | None = None) -> frozenset[str]:
    """Named entities of a text under the given (or fallback) recognizer."""
    return (recognizer or DEFAULT_RECOGNIZER)(text)


def ne_overlap(
    evidence_sentences: Sequence[str],
    non_evidence_sentences: Sequence[str],
    recognizer: Recognizer | None = None,
) -> float:
    """Jaccard overlap |E & N| / |E | N| of the two entity sets; 0 when both
    sets are empty."""
    rec = recognizer or DEFAULT_RECOGNIZER
    e: set[str] = set()
    for s in evidence_sentences:
        e |= rec(s)
    n: set[str] = set()
    for s in non_evidence_sentences:
        n |= rec(s)
    union = e | n
    if not union:
        return 0.0
    return len(e & n) / len(union)


# ---------------------------------------------------------------------------
# replacement pool


@dataclass(frozen=True)
class PoolEntry:
    text: str
    entities: frozenset[str]
    article_id: str | None = None


class ReplacementPool:
    """Read-only collection of candidate replacement sentences.

    File format is TSV with 1-3 columns per line: ``text``,
    ``article_id<TAB>text`` or ``article_id<TAB>text<TAB>ent|ent|...``.
    Entities are recomputed with the recognizer when not precomputed.
    """

    def __init__(self, entries: Sequence[PoolEntry]):
        self.entries = list(entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_articles(
        cls,
        articles: Iterable[ArticleInstance | ChainInstance],
        recognizer: Recognizer | None = None,
    ) -> "ReplacementPool":
        rec = recognizer or DEFAULT_RECOGNIZER
        entries = []
        seen: set[str] = set()
        for article in articles:
            article_id = _article_id_of(article)
            if article_id in seen:  # chain instances repeat their article
                continue
            seen.add(article_id)
            for sentence in article.sentences:
                entries.append(
                    PoolEntry(text=sentence, entities=rec(sentence), article_id=article_id)
                )
        return cls(entries)

    @classmethod
    def from_file(cls, path, recognizer: Recognizer | None = None) -> "ReplacementPool":
        rec = recognizer or DEFAULT_RECOGNIZER
        entries = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) == 1:
                    entries.append(PoolEntry(text=parts[0], entities=rec(parts[0])))
                elif len(parts) == 2:
                    entries.append(PoolEntry(text=parts[1], entities=rec(parts[1]), article_id=parts[0]))
                else:
                    ents = frozenset(
                        normalize_entity(e) for e in parts[2].split("|") if e.strip()
                    )
                    entries.append(PoolEntry(text=parts[1], entities=ents, article_id=parts[0]))
        return cls(entries)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for entry in self.entries:
                ents = "|".join(sorted(entry.entities))
                f.write(f"{entry.article_id or ''}\t{entry.text}\t{ents}\n")


# ---------------------------------------------------------------------------
# builders


def _article_id_of(instance: ArticleInstance | ChainInstance) -> str:
    return instance.article_id if isinstance(instance, ChainInstance) else instance.id


def _evidence_positions(instance: ArticleInstance | ChainInstance) -> set[int]:
    if isinstance(instance, ChainInstance):
        return set(instance.evidence)
    return set(instance.evidence_union())


def build_even_split(
    instance: ArticleInstance | ChainInstance,
    seed: int,
    article_chains: Sequence[Sequence[int]] | None = None,
) -> ArticleInstance | ChainInstance:
    """Restrict an instance to its evidence plus a capped non-evidence sample.

    For a chain instance the kept non-evidence is the article's other chains
    plus uniform samples until the total reaches the sum of all the article's
    chain lengths (the cap follows from one-chain-per-example splitting).
    `article_chains` supplies those sibling chains in original article
    coordinates; without it the instance's own chain is assumed to be the only
    one. For a (test) article the non-evidence count is capped at the size of
    the evidence union. Evidence text and relative sentence order are never
    touched.
    """
    rng = random.Random(seed)

    if isinstance(instance, ChainInstance):
        if article_chains is None:
            article_chains = [instance.evidence_original()]
        n = len(instance.sentences)
        position_of = {orig: i for i, orig in enumerate(instance.origin_map)}
        own = set(instance.evidence)
        sibling = {
            position_of[o]
            for chain in article_chains
            for o in chain
            if o in position_of
        } - own
        target = sum(len(chain) for chain in article_chains)
        candidates = sorted(set(range(n)) - own - sibling)
        need = min(max(0, target - len(sibling)), len(candidates))
        sampled = rng.sample(candidates, need)
        keep = sorted(own | sibling | set(sampled))
        new_positions = {old: new for new, old in enumerate(keep)}
        return ChainInstance(
            article_id=instance.article_id,
            chain_id=instance.chain_id,
            claim=instance.claim,
            speaker=instance.speaker,
            label=instance.label,
            sentences=tuple(instance.sentences[i] for i in keep),
            evidence=frozenset(new_positions[i] for i in own),
            origin_map=tuple(instance.origin_map[i] for i in keep),
        )

    union = set(instance.evidence_union())
    n = len(instance.sentences)
    others = sorted(set(range(n)) - union)
    take = min(len(union), len(others))
    sampled = rng.sample(others, take)
    keep = sorted(union | set(sampled))
    new_positions = {old: new for new, old in enumerate(keep)}
    old_origin = instance.origin_map or tuple(range(n))
    return replace(
        instance,
        sentences=tuple(instance.sentences[i] for i in keep),
        evidence_chains=tuple(
            tuple(new_positions[i] for i in chain) for chain in instance.evidence_chains
        ),
        origin_map=tuple(old_origin[i] for i in keep),
    )


FALLBACK_RELAXED = "relaxed-to-any-entity"
FALLBACK_KEPT = "kept-original"


@dataclass(frozen=True)
class FallbackRecord:
    instance_id: str
    position: int
    level: str


def build_adversarial(
    even_instance: ArticleInstance | ChainInstance,
    pool: ReplacementPool,
    seed: int,
    recognizer: Recognizer | None = None,
) -> tuple[ArticleInstance | ChainInstance, list[FallbackRecord]]:
    """Replace every non-evidence sentence with a pool sentence sharing a
    named entity with the instance's evidence.

    Sampling is uniform with replacement over the qualifying pool entries and
    never draws from the instance's own article. When no pool sentence shares
    an evidence entity the builder relaxes to any entity-bearing sentence, and
    as a last resort keeps the original; both fallbacks are returned and
    logged. Evidence indices and the sentence count are unchanged.
    """
    if not len(pool):
        raise CorpusError("replacement pool is empty")
    rec = recognizer or DEFAULT_RECOGNIZER
    rng = random.Random(seed)
    own_article = _article_id_of(even_instance)
    evidence_positions = _evidence_positions(even_instance)
    evidence_entities: set[str] = set()
    for i in evidence_positions:
        evidence_entities |= rec(even_instance.sentences[i])

    foreign = [e for e in pool.entries if e.article_id != own_article]
    sharing = [e for e in foreign if e.entities & evidence_entities]
    bearing = [e for e in foreign if e.entities]

    sentences = list(even_instance.sentences)
    fallbacks = []
    for position in range(len(sentences)):
        if position in evidence_positions:
            continue
        if sharing:
            sentences[position] = rng.choice(sharing).text
        elif bearing:
            sentences[position] = rng.choice(bearing).text
            fallbacks.append(FallbackRecord(_article_id_of(even_instance), position, FALLBACK_RELAXED))
        else:
            fallbacks.append(FallbackRecord(_article_id_of(even_instance), position, FALLBACK_KEPT))
    for record in fallbacks:
        logger.warning(
            "adversarial fallback (%s) for instance %s position %d",
            record.level,
            record.instance_id,
            record.position,
        )
    return replace(even_instance, sentences=tuple(sentences)), fallbacks
