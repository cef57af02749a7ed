"""Importers that translate source dataset formats into the canonical schema.

Supported sources:

* ``politihop``  -- TSV with a header row; sentences and evidence chains are
  stored as Python/JSON list literals inside single cells.
* ``liar_plus``  -- headerless TSV (column positions); the extracted
  justification becomes the article and its sentences form one chain.
* ``fever``      -- JSONL; each annotated evidence set becomes one chain.
  Records whose evidence cannot be resolved to sentence text (raw wiki
  pointers, or no evidence at all) are skipped and counted.
* ``canonical``  -- identity passthrough, re-serializing an already canonical
  file.

Every importer is driven by an AdapterConfig (column mapping + label-mapping
table), so undocumented source variations can be fixed without code changes.
"""

from __future__ import annotations

import ast
import csv
import json
import re
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import (
    ArticleInstance,
    CorpusError,
    LABELS,
    load_canonical,
    normalize_chain,
)

SOURCE_FORMATS = ("politihop", "liar_plus", "fever", "canonical")


class AdapterError(CorpusError):
    """Configuration or source-content problem during import."""


def normalize_label_key(raw: str) -> str:
    return re.sub(r"[\s_]+", "-", raw.strip().lower())


@dataclass
class AdapterConfig:
    """Maps source columns/fields to canonical fields.

    `columns` keys are canonical names (claim, speaker, label, sentences,
    evidence, id); values name a source column (or a 0-based position for
    headerless TSV). `label_map` keys are normalized source labels.
    `index_base` is the base of evidence indices in the source (PolitiFact
    rulings are conventionally numbered from 1).
    """

    columns: dict[str, str | int] = field(default_factory=dict)
    label_map: dict[str, str] = field(default_factory=dict)
    index_base: int = 0
    delimiter: str = "\t"
    has_header: bool = True

    def to_dict(self) -> dict:
        return {
            "columns": dict(self.columns),
            "label_map": dict(self.label_map),
            "index_base": self.index_base,
            "delimiter": self.delimiter,
            "has_header": self.has_header,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdapterConfig":
        cfg = cls()
        cfg.columns = dict(d.get("columns", {}))
        cfg.label_map = {normalize_label_key(k): v for k, v in d.get("label_map", {}).items()}
        cfg.index_base = int(d.get("index_base", 0))
        cfg.delimiter = d.get("delimiter", "\t")
        cfg.has_header = bool(d.get("has_header", True))
        return cfg

    @classmethod
    def load(cls, path) -> "AdapterConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    def map_label(self, raw: str) -> str:
        key = normalize_label_key(raw)
        if key not in self.label_map:
            raise AdapterError(
                f"unknown source label {raw!r}; known labels: {sorted(self.label_map)}"
            )
        mapped = self.label_map[key]
        if mapped not in LABELS:
            raise AdapterError(f"label map sends {raw!r} to non-canonical {mapped!r}")
        return mapped


IDENTITY_LABEL_MAP = {"false": "false", "half-true": "half-true", "true": "true"}

# LIAR six-way labels folded onto the three-way space: the bottom three map to
# false, the top two to true.
LIAR_LABEL_MAP = {
    "pants-fire": "false",
    "false": "false",
    "barely-true": "false",
    "half-true": "half-true",
    "mostly-true": "true",
    "true": "true",
}

FEVER_LABEL_MAP = {
    "supports": "true",
    "refutes": "false",
    "not-enough-info": "half-true",
}


def default_config(source_format: str) -> AdapterConfig:
    if source_format == "politihop":
        return AdapterConfig(
            columns={
                "id": "article_id",
                "claim": "statement",
                "speaker": "author",
                "label": "annotated_label",
                "sentences": "ruling",
                "evidence": "annotated_evidence",
            },
            label_map=dict(IDENTITY_LABEL_MAP),
            index_base=1,
        )
    if source_format == "liar_plus":
        # headerless tsv2 layout: row index, statement id, label, statement,
        # subject, speaker, job, state, party, 5 count columns, context,
        # justification
        return AdapterConfig(
            columns={"id": 1, "label": 2, "claim": 3, "speaker": 5, "justification": 15},
            label_map=dict(LIAR_LABEL_MAP),
            has_header=False,
        )
    if source_format == "fever":
        return AdapterConfig(
            columns={"id": "id", "claim": "claim", "label": "label", "evidence": "evidence"},
            label_map=dict(FEVER_LABEL_MAP),
        )
    if source_format == "canonical":
        return AdapterConfig(label_map=dict(IDENTITY_LABEL_MAP))
    raise AdapterError(f"unknown source format {source_format!r}; expected one of {SOURCE_FORMATS}")


@dataclass
class ImportResult:
    instances: list[ArticleInstance]
    skipped: int = 0
    skip_reasons: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# cell parsing helpers


def parse_list_cell(cell: str, where: str) -> list:
    """Parse a TSV cell holding a Python or JSON list literal."""
    text = cell.strip()
    if not text:
        return []
    for parser in (ast.literal_eval, json.loads):
        try:
            value = parser(text)
        except (ValueError, SyntaxError):
            continue
        if isinstance(value, (list, tuple, dict)):
            return list(value.items()) if isinstance(value, dict) else list(value)
    raise AdapterError(f"{where}: cannot parse list cell {text[:60]!r}")


def parse_chains(value, index_base: int, where: str) -> list[tuple[int, ...]]:
    """Normalize the many observed chain encodings to 0-based index tuples.

    Accepts a list of lists of ints, a list of comma-separated strings, a flat
    list of ints (one chain), or dict items (chain name -> indices).
    """

    def to_indices(item) -> list[int]:
        if isinstance(item, str):
            parts = [p for p in re.split(r"[,;\s]+", item.strip()) if p]
            return [int(p) for p in parts]
        if isinstance(item, (list, tuple)):
            return [int(i) for i in item]
        return [int(item)]

    if not isinstance(value, (list, tuple)):
        raise AdapterError(f"{where}: evidence annotation is not a sequence")
    items = list(value)
    if not items:
        return []
    if all(isinstance(i, tuple) and len(i) == 2 for i in items) and any(
        isinstance(i[1], (list, tuple, str)) for i in items
    ):
        # dict items sorted by chain key for determinism
        items = [v for _, v in sorted(items, key=lambda kv: str(kv[0]))]
    if all(isinstance(i, int) for i in items):
        chains = [items]
    else:
        chains = [to_indices(i) for i in items]
    out = []
    for chain in chains:
        shifted = [i - index_base for i in chain]
        if any(i < 0 for i in shifted):
            raise AdapterError(
                f"{where}: evidence index below base {index_base}; check index_base in the mapping"
            )
        normalized = normalize_chain(shifted)
        if normalized:
            out.append(normalized)
    return out


_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Naive sentence splitter used for sources that ship running text."""
    return [s.strip() for s in _SENTENCE_BOUNDARY.split(text.strip()) if s.strip()]


# ---------------------------------------------------------------------------
# per-source importers


def _read_tsv(path, config: AdapterConfig) -> tuple[list[dict | list], bool]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=config.delimiter)
        rows = [row for row in reader if row]
    if not rows:
        return [], config.has_header
    if config.has_header:
        header = rows[0]
        records = [dict(zip(header, row)) for row in rows[1:]]
        return records, True
    return [row for row in rows], False


def _cell(record, column, where, required=True, default=""):
    if isinstance(record, dict):
        if column not in record:
            if required:
                raise AdapterError(f"{where}: missing mapped column {column!r}")
            return default
        return record[column]
    index = int(column)
    if index >= len(record):
        if required:
            raise AdapterError(f"{where}: missing mapped column {column!r} (row too short)")
        return default
    return record[index]


def _import_politihop(path, config: AdapterConfig, default_split: str) -> ImportResult:
    records, _ = _read_tsv(path, config)
    cols = config.columns
    for needed in ("id", "claim", "label", "sentences", "evidence"):
        if needed not in cols:
            raise AdapterError(f"politihop mapping is missing the {needed!r} column")
    instances = []
    skipped = 0
    reasons = []
    for i, record in enumerate(records):
        where = f"{path}, record {i + 1}"
        sentences = [str(s) for s in parse_list_cell(_cell(record, cols["sentences"], where), where)]
        chains = parse_chains(
            parse_list_cell(_cell(record, cols["evidence"], where), where),
            config.index_base,
            where,
        )
        if not chains:
            skipped += 1
            reasons.append(f"{where}: no evidence chains")
            continue
        speaker = ""
        if "speaker" in cols:
            speaker = str(_cell(record, cols["speaker"], where, required=False)).strip()
        instances.append(
            ArticleInstance(
                id=str(_cell(record, cols["id"], where)).strip(),
                claim=str(_cell(record, cols["claim"], where)).strip(),
                speaker=speaker,
                label=config.map_label(str(_cell(record, cols["label"], where))),
                sentences=tuple(sentences),
                evidence_chains=tuple(chains),
                split=default_split,
            )
        )
    return ImportResult(instances=instances, skipped=skipped, skip_reasons=reasons)


def _import_liar_plus(path, config: AdapterConfig, default_split: str) -> ImportResult:
    records, _ = _read_tsv(path, config)
    cols = config.columns
    for needed in ("id", "claim", "label", "justification"):
        if needed not in cols:
            raise AdapterError(f"liar_plus mapping is missing the {needed!r} column")
    instances = []
    skipped = 0
    reasons = []
    for i, record in enumerate(records):
        where = f"{path}, record {i + 1}"
        justification = str(_cell(record, cols["justification"], where, required=False)).strip()
        sentences = split_sentences(justification)
        if not sentences:
            skipped += 1
            reasons.append(f"{where}: empty justification")
            continue
        speaker = ""
        if "speaker" in cols:
            speaker = str(_cell(record, cols["speaker"], where, required=False)).strip()
        # the whole justification is the single annotated chain
        chain = tuple(range(len(sentences)))
        instances.append(
            ArticleInstance(
                id=str(_cell(record, cols["id"], where)).strip(),
                claim=str(_cell(record, cols["claim"], where)).strip(),
                speaker=speaker,
                label=config.map_label(str(_cell(record, cols["label"], where))),
                sentences=tuple(sentences),
                evidence_chains=(chain,),
                split=default_split,
            )
        )
    return ImportResult(instances=instances, skipped=skipped, skip_reasons=reasons)


def _fever_evidence_texts(evidence_set) -> list[str] | None:
    """Extract inline sentence texts from one FEVER annotation set.

    Returns None when the set only holds raw wiki pointers (no usable text).
    """
    texts = []
    for item in evidence_set:
        if isinstance(item, str):
            texts.append(item)
        elif isinstance(item, dict) and "text" in item:
            texts.append(str(item["text"]))
        elif isinstance(item, (list, tuple)):
            # raw shape [annotation_id, evidence_id, page, sent_idx]
            if len(item) >= 3 and item[2] is None:
                return None
            tail = [x for x in item if isinstance(x, str)]
            if len(item) >= 5 and isinstance(item[4], str):
                texts.append(item[4])
            elif not tail or all(len(t.split()) <= 6 for t in tail):
                return None  # page titles only, no sentence text
            else:
                texts.append(max(tail, key=len))
        else:
            return None
    return texts if texts else None


def _import_fever(path, config: AdapterConfig, default_split: str) -> ImportResult:
    cols = config.columns
    instances = []
    skipped = 0
    reasons = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{path}, line {lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                raise AdapterError(f"{where}: invalid JSON")
            claim = str(record.get(cols.get("claim", "claim"), "")).strip()
            raw_label = record.get(cols.get("label", "label"))
            if raw_label is None:
                raise AdapterError(f"{where}: missing mapped column {cols.get('label', 'label')!r}")
            evidence = record.get(cols.get("evidence", "evidence"), [])

            sentences_field = cols.get("sentences")
            if sentences_field and sentences_field in record:
                sentences = [str(s) for s in record[sentences_field]]
                chains = []
                for ev_set in evidence:
                    indices = [int(i) for i in ev_set if isinstance(i, (int, float, str))]
                    chain = normalize_chain(indices)
                    if chain:
                        chains.append(chain)
            else:
                # no sentence list: collect inline evidence texts as the article
                sentences = []
                positions: dict[str, int] = {}
                chains = []
                unusable = False
                for ev_set in evidence:
                    texts = _fever_evidence_texts(ev_set)
                    if texts is None:
                        unusable = True
                        continue
                    indices = []
                    for t in texts:
                        if t not in positions:
                            positions[t] = len(sentences)
                            sentences.append(t)
                        indices.append(positions[t])
                    chain = normalize_chain(indices)
                    if chain:
                        chains.append(chain)
                if unusable and not chains:
                    skipped += 1
                    reasons.append(f"{where}: evidence has no resolvable sentence text")
                    continue
            if not chains:
                skipped += 1
                reasons.append(f"{where}: no evidence chains")
                continue
            speaker = ""
            if "speaker" in cols and cols["speaker"] in record:
                speaker = str(record[cols["speaker"]]).strip()
            instances.append(
                ArticleInstance(
                    id=str(record.get(cols.get("id", "id"), lineno)),
                    claim=claim,
                    speaker=speaker,
                    label=config.map_label(str(raw_label)),
                    sentences=tuple(sentences),
                    evidence_chains=tuple(chains),
                    split=default_split,
                )
            )
    return ImportResult(instances=instances, skipped=skipped, skip_reasons=reasons)


def import_dataset(
    source_format: str,
    path,
    mapping: AdapterConfig | None = None,
    default_split: str = "train",
) -> ImportResult:
    """Import a source file into canonical instances.

    The result's instances all pass canonical validation; records that cannot
    yield at least one evidence chain are skipped and reported, not imported.
    """
    if source_format not in SOURCE_FORMATS:
        raise AdapterError(
            f"unknown source format {source_format!r}; expected one of {SOURCE_FORMATS}"
        )
    config = mapping or default_config(source_format)
    if source_format == "canonical":
        return ImportResult(instances=load_canonical(path))
    if source_format == "politihop":
        result = _import_politihop(path, config, default_split)
    elif source_format == "liar_plus":
        result = _import_liar_plus(path, config, default_split)
    else:
        result = _import_fever(path, config, default_split)
    for instance in result.instances:
        problems = instance.violations()
        if problems:
            raise AdapterError(f"imported instance fails validation: {problems[0]}")
    return result
