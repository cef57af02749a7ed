"""Node construction and pluggable contextual encoders.

Every article sentence becomes one node: a token sequence holding the
claim and speaker (segment A) followed by the sentence itself (segment B),
opened by a summary token whose output vector represents the node.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import torch
from torch import nn

from .corpus import ArticleInstance, ChainInstance

Instance = ArticleInstance | ChainInstance

MIN_NODE_LEN = 8
DEFAULT_MAX_NODE_LEN = 128

_WORD = re.compile(r"\w+|[^\w\s]")


class ConfigError(ValueError):
    """A structurally invalid encoder or model configuration."""


class VocabularyError(ValueError):
    """A token id that the selected backend cannot embed."""


def word_split(text: str) -> list[str]:
    """Case-folded word/punctuation tokens used by the trainable tokenizer."""
    return _WORD.findall(text.casefold())


@dataclass
class WordTokenizer:
    """Whole-word vocabulary with the conventional special tokens.

    Ids: 0 = padding, 1 = summary ("[CLS]" role), 2 = separator,
    3 = unknown; ids 4 .. 4+num_reserved-1 are reserved position tokens
    ("[unused0]" .. style) used by sentence-id mode; words follow.
    """

    words: tuple[str, ...]
    num_reserved: int = 64
    version: int = 1
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    PAD_ID = 0
    CLS_ID = 1
    SEP_ID = 2
    UNK_ID = 3

    def __post_init__(self) -> None:
        base = 4 + self.num_reserved
        self._index = {w: base + i for i, w in enumerate(self.words)}

    @property
    def pad_id(self) -> int:
        return self.PAD_ID

    @property
    def cls_id(self) -> int:
        return self.CLS_ID

    @property
    def sep_id(self) -> int:
        return self.SEP_ID

    @property
    def unk_id(self) -> int:
        return self.UNK_ID

    @property
    def vocab_size(self) -> int:
        return 4 + self.num_reserved + len(self.words)

    def reserved_id(self, position: int) -> int:
        if not 0 <= position < self.num_reserved:
            raise ConfigError(
                f"sentence position {position} exceeds the {self.num_reserved} "
                "reserved position tokens"
            )
        return 4 + position

    def encode(self, text: str) -> list[int]:
        return [self._index.get(w, self.UNK_ID) for w in word_split(text)]

    @classmethod
    def from_texts(
        cls, texts: Iterable[str], max_vocab: int | None = None, num_reserved: int = 64
    ) -> "WordTokenizer":
        counts = Counter(w for text in texts for w in word_split(text))
        ranked = sorted(counts, key=lambda w: (-counts[w], w))
        if max_vocab is not None:
            ranked = ranked[:max_vocab]
        return cls(words=tuple(ranked), num_reserved=num_reserved)

    # -- versioned asset ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "hopcheck-vocab",
            "version": self.version,
            "num_reserved": self.num_reserved,
            "words": list(self.words),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "WordTokenizer":
        if payload.get("format") != "hopcheck-vocab":
            raise ValueError("not a tokenizer vocabulary asset")
        return cls(
            words=tuple(payload["words"]),
            num_reserved=payload["num_reserved"],
            version=payload["version"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordTokenizer":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


class TokenizerProtocol(Protocol):
    pad_id: int
    cls_id: int
    sep_id: int
    unk_id: int

    def encode(self, text: str) -> list[int]: ...

    def reserved_id(self, position: int) -> int: ...


# ---------------------------------------------------------------------------
# node construction


@dataclass(frozen=True)
class NodeBatch:
    """One token sequence per article sentence, in sentence order.

    Segment markers are 0 for the claim+speaker segment (including the
    summary token) and 1 for the sentence segment. `sentence_indices`
    holds each node's original sentence index.
    """

    token_ids: tuple[tuple[int, ...], ...]
    segment_ids: tuple[tuple[int, ...], ...]
    sentence_indices: tuple[int, ...]
    max_node_len: int

    def __post_init__(self) -> None:
        if len(self.token_ids) != len(self.segment_ids) or len(self.token_ids) != len(
            self.sentence_indices
        ):
            raise ValueError("token_ids, segment_ids and sentence_indices disagree in length")
        for tokens, segments in zip(self.token_ids, self.segment_ids):
            if len(tokens) != len(segments):
                raise ValueError("a node's token and segment sequences disagree in length")
            if len(tokens) > self.max_node_len:
                raise ValueError("a node exceeds max_node_len")

    def __len__(self) -> int:
        return len(self.token_ids)


def build_nodes(
    instance: Instance,
    tokenizer: TokenizerProtocol,
    max_node_len: int = DEFAULT_MAX_NODE_LEN,
    sentence_id_mode: bool = False,
) -> NodeBatch:
    """Tokenize every sentence of the instance into a node sequence.

    Layout per sentence j:
      [summary] claim [sep] speaker [sep]      <- segment A
      ([reserved_j]) sentence_j [sep]          <- segment B

    When the node is overlong, segment B is trimmed from its tail first,
    then segment A from its tail; the summary token is never removed.
    """
    if max_node_len < MIN_NODE_LEN:
        raise ConfigError(f"max_node_len must be at least {MIN_NODE_LEN}, got {max_node_len}")
    claim_ids = tokenizer.encode(instance.claim)
    speaker_ids = tokenizer.encode(instance.speaker)
    segment_a = [tokenizer.cls_id, *claim_ids, tokenizer.sep_id, *speaker_ids, tokenizer.sep_id]
    all_tokens: list[tuple[int, ...]] = []
    all_segments: list[tuple[int, ...]] = []
    for j, sentence in enumerate(instance.sentences):
        segment_b = [*tokenizer.encode(sentence), tokenizer.sep_id]
        if sentence_id_mode:
            segment_b.insert(0, tokenizer.reserved_id(j))
        a, b = list(segment_a), segment_b
        overflow = len(a) + len(b) - max_node_len
        if overflow > 0:
            trim_b = min(overflow, len(b))
            b = b[: len(b) - trim_b]
            overflow -= trim_b
        if overflow > 0:
            a = a[: len(a) - overflow]  # never reaches the summary token at 0
        all_tokens.append(tuple(a + b))
        all_segments.append(tuple([0] * len(a) + [1] * len(b)))
    return NodeBatch(
        token_ids=tuple(all_tokens),
        segment_ids=tuple(all_segments),
        sentence_indices=tuple(range(len(instance.sentences))),
        max_node_len=max_node_len,
    )


# ---------------------------------------------------------------------------
# encoded output


@dataclass
class NodeRepresentations:
    """Per-node contextual vectors: `vectors` is (nodes, positions, H) and
    `mask` flags real (non-padding) positions. The summary vector of node
    τ is vectors[τ, 0]."""

    vectors: torch.Tensor
    mask: torch.Tensor

    @property
    def hidden_size(self) -> int:
        return int(self.vectors.shape[-1])

    @property
    def summaries(self) -> torch.Tensor:
        return self.vectors[:, 0, :]


class EncoderBackend(Protocol):
    """Contract every encoder backend satisfies."""

    name: str
    hidden_size: int
    max_len: int
    trainable: bool

    def encode(self, batch: NodeBatch) -> NodeRepresentations: ...


def _pad_batch(batch: NodeBatch, pad_id: int) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    width = max((len(t) for t in batch.token_ids), default=1)
    n = len(batch)
    tokens = torch.full((n, width), pad_id, dtype=torch.long)
    segments = torch.zeros((n, width), dtype=torch.long)
    mask = torch.zeros((n, width), dtype=torch.bool)
    for i, (tok, seg) in enumerate(zip(batch.token_ids, batch.segment_ids)):
        tokens[i, : len(tok)] = torch.tensor(tok, dtype=torch.long)
        segments[i, : len(seg)] = torch.tensor(seg, dtype=torch.long)
        mask[i, : len(tok)] = True
    return tokens, segments, mask


def _check_vocabulary(batch: NodeBatch, vocab_size: int, backend_name: str) -> None:
    for node, tokens in enumerate(batch.token_ids):
        for position, token in enumerate(tokens):
            if not 0 <= token < vocab_size:
                raise VocabularyError(
                    f"token id {token} at node {node}, position {position} is outside "
                    f"the {backend_name} vocabulary (size {vocab_size})"
                )


class TinyEncoderModule(nn.Module):
    """A small trainable transformer encoder: token + position + segment
    embeddings followed by self-attention blocks."""

    def __init__(
        self,
        vocab_size: int,
        hidden_size: int = 32,
        num_layers: int = 2,
        num_heads: int = 2,
        max_len: int = DEFAULT_MAX_NODE_LEN,
    ) -> None:
        super().__init__()
        if hidden_size % num_heads:
            raise ConfigError("hidden_size must be divisible by num_heads")
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.token_embedding = nn.Embedding(vocab_size, hidden_size)
        self.position_embedding = nn.Embedding(max_len, hidden_size)
        self.segment_embedding = nn.Embedding(2, hidden_size)
        layer = nn.TransformerEncoderLayer(
            d_model=hidden_size,
            nhead=num_heads,
            dim_feedforward=4 * hidden_size,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
        )
        self.blocks = nn.TransformerEncoder(layer, num_layers, enable_nested_tensor=False)

    def forward(
        self, tokens: torch.Tensor, segments: torch.Tensor, mask: torch.Tensor
    ) -> torch.Tensor:
        positions = torch.arange(tokens.shape[1], device=tokens.device)
        states = (
            self.token_embedding(tokens)
            + self.position_embedding(positions)[None, :, :]
            + self.segment_embedding(segments)
        )
        return self.blocks(states, src_key_padding_mask=~mask)


class TinyBackend:
    """From-scratch trainable backend; deterministic in evaluation mode."""

    name = "tiny-trainable"
    trainable = True

    def __init__(
        self,
        tokenizer: WordTokenizer,
        hidden_size: int = 32,
        num_layers: int = 2,
        num_heads: int = 2,
        max_len: int = DEFAULT_MAX_NODE_LEN,
        seed: int = 42,
    ) -> None:
        self.tokenizer = tokenizer
        self.hidden_size = hidden_size
        self.max_len = max_len
        generator_state = torch.random.get_rng_state()
        torch.manual_seed(seed)
        try:
            self.module = TinyEncoderModule(
                vocab_size=tokenizer.vocab_size,
                hidden_size=hidden_size,
                num_layers=num_layers,
                num_heads=num_heads,
                max_len=max_len,
            )
        finally:
            torch.random.set_rng_state(generator_state)
        self.module.eval()

    def encode(self, batch: NodeBatch) -> NodeRepresentations:
        if len(batch) == 0:
            raise ValueError("cannot encode an empty node batch")
        _check_vocabulary(batch, self.tokenizer.vocab_size, self.name)
        tokens, segments, mask = _pad_batch(batch, self.tokenizer.pad_id)
        vectors = self.module(tokens, segments, mask)
        return NodeRepresentations(vectors=vectors, mask=mask)


class PretrainedBackend:
    """Optional 12-layer, hidden-size-768 pretrained backend.

    Requires the `transformers` extra and model weights (network or local
    cache); everything is imported lazily so the core package works
    without it.
    """

    name = "pretrained-12x768"
    hidden_size = 768
    trainable = True

    def __init__(self, model_name: str = "bert-base-uncased", max_len: int = DEFAULT_MAX_NODE_LEN):
        try:
            from transformers import AutoModel, AutoTokenizer  # noqa: PLC0415
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "the pretrained-12x768 backend needs the optional 'transformers' "
                "dependency (pip install hopcheck[pretrained])"
            ) from exc
        self.max_len = max_len
        self._hf_tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.module = AutoModel.from_pretrained(model_name)
        self.module.eval()
        self.tokenizer = _HFTokenizerAdapter(self._hf_tokenizer)

    def encode(self, batch: NodeBatch) -> NodeRepresentations:  # pragma: no cover - needs weights
        if len(batch) == 0:
            raise ValueError("cannot encode an empty node batch")
        _check_vocabulary(batch, self._hf_tokenizer.vocab_size, self.name)
        tokens, segments, mask = _pad_batch(batch, self.tokenizer.pad_id)
        output = self.module(
            input_ids=tokens, token_type_ids=segments, attention_mask=mask.long()
        )
        return NodeRepresentations(vectors=output.last_hidden_state, mask=mask)


class _HFTokenizerAdapter:  # pragma: no cover - exercised only with the optional extra
    """Adapts a wordpiece tokenizer to the node-building protocol."""

    def __init__(self, hf_tokenizer) -> None:
        self._tok = hf_tokenizer
        self.pad_id = hf_tokenizer.pad_token_id
        self.cls_id = hf_tokenizer.cls_token_id
        self.sep_id = hf_tokenizer.sep_token_id
        self.unk_id = hf_tokenizer.unk_token_id

    def encode(self, text: str) -> list[int]:
        return self._tok.encode(text, add_special_tokens=False)

    def reserved_id(self, position: int) -> int:
        token = f"[unused{position}]"
        token_id = self._tok.convert_tokens_to_ids(token)
        if token_id is None or token_id == self.unk_id:
            raise ConfigError(f"tokenizer has no reserved token {token}")
        return token_id


BACKEND_NAMES = ("tiny-trainable", "pretrained-12x768")


def make_backend(
    name: str, tokenizer: WordTokenizer | None = None, **kwargs
) -> TinyBackend | PretrainedBackend:
    """Instantiate an encoder backend by configuration name."""
    if name == "tiny-trainable":
        if tokenizer is None:
            raise ConfigError("the tiny-trainable backend requires a tokenizer")
        return TinyBackend(tokenizer, **kwargs)
    if name == "pretrained-12x768":
        return PretrainedBackend(**kwargs)
    raise ConfigError(f"unknown backend {name!r}; expected one of {BACKEND_NAMES}")
