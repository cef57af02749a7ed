"""Verification models: a single-step classifier and its graph extension
with hop attention layers over a fully connected sentence-node graph.

Both share the same dual heads — a per-node label distribution and an
across-node importance distribution — combined into one claim-level label
by probability-weighted mixture. Zero hop layers is exactly the
single-step model.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import torch
from torch import nn
from torch.nn import functional as F

from .corpus import LABELS, ArticleInstance, ChainInstance
from .encoding import (
    DEFAULT_MAX_NODE_LEN,
    ConfigError,
    NodeBatch,
    PretrainedBackend,
    TinyBackend,
    WordTokenizer,
    build_nodes,
    make_backend,
)
from .prediction import DEFAULT_TOP_K, Prediction, select_evidence

Instance = ArticleInstance | ChainInstance

MAX_HOPS = 7


@dataclass(frozen=True)
class HopStackConfig:
    """Graph-attention stack shape: how many hop layers, their internal
    hidden size, and attention heads per layer."""

    num_hops: int = 3
    hop_hidden: int = 64
    attention_heads: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.num_hops <= MAX_HOPS:
            raise ConfigError(f"num_hops must be in [0, {MAX_HOPS}], got {self.num_hops}")
        if self.hop_hidden <= 0:
            raise ConfigError("hop_hidden must be positive")
        if self.attention_heads <= 0 or self.hop_hidden % self.attention_heads:
            raise ConfigError("hop_hidden must be divisible by a positive attention_heads")


@dataclass(frozen=True)
class VerifierConfig:
    """Everything needed to rebuild a verifier deterministically."""

    backend: str = "tiny-trainable"
    hops: HopStackConfig = field(default_factory=HopStackConfig)
    top_k: int = DEFAULT_TOP_K
    max_node_len: int = DEFAULT_MAX_NODE_LEN
    sentence_id_mode: bool = False
    seed: int = 42
    encoder_hidden: int = 32
    encoder_layers: int = 2
    encoder_heads: int = 2
    pretrained_name: str = "bert-base-uncased"

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["hops"] = asdict(self.hops)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "VerifierConfig":
        data = dict(payload)
        data["hops"] = HopStackConfig(**data["hops"])
        return cls(**data)

    def with_hops(self, num_hops: int) -> "VerifierConfig":
        return replace(self, hops=replace(self.hops, num_hops=num_hops))


class HopLayer(nn.Module):
    """One graph-attention hop over the summary vectors.

    Every ordered node pair (u, v), self-edges included, gets a learned
    compatibility score; a softmax over v turns each row into attention
    weights, and node u's new summary is a nonlinearity of the
    attention-weighted value sum projected back to the model width.
    """

    def __init__(self, model_dim: int, hop_hidden: int = 64, attention_heads: int = 1) -> None:
        super().__init__()
        if attention_heads <= 0 or hop_hidden % attention_heads:
            raise ConfigError("hop_hidden must be divisible by a positive attention_heads")
        self.attention_heads = attention_heads
        self.head_dim = hop_hidden // attention_heads
        self.project = nn.Linear(model_dim, hop_hidden, bias=False)
        self.attn_src = nn.Parameter(torch.empty(attention_heads, self.head_dim))
        self.attn_dst = nn.Parameter(torch.empty(attention_heads, self.head_dim))
        self.output = nn.Linear(hop_hidden, model_dim)
        self.activation_slope = 0.2
        nn.init.xavier_uniform_(self.attn_src)
        nn.init.xavier_uniform_(self.attn_dst)

    def forward(self, summaries: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if summaries.ndim != 2 or summaries.shape[0] == 0:
            raise ValueError("summaries must be a non-empty (nodes, dim) matrix")
        n = summaries.shape[0]
        projected = self.project(summaries).view(n, self.attention_heads, self.head_dim)
        src_score = (projected * self.attn_src).sum(-1)  # (n, heads)
        dst_score = (projected * self.attn_dst).sum(-1)
        scores = F.leaky_relu(
            src_score[:, None, :] + dst_score[None, :, :], self.activation_slope
        )  # (u, v, heads)
        alpha = torch.softmax(scores, dim=1)
        mixed = torch.einsum("uvh,vhd->uhd", alpha, projected).reshape(n, -1)
        updated = F.elu(self.output(mixed))
        return updated, alpha.mean(dim=-1)


class NodeHeads(nn.Module):
    """Dual heads over summary vectors: per-node label distribution and a
    single importance distribution normalized across nodes. The heads do
    not share parameters."""

    def __init__(self, model_dim: int) -> None:
        super().__init__()
        self.label = nn.Linear(model_dim, len(LABELS))
        self.importance = nn.Linear(model_dim, 1)

    def forward(self, summaries: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if summaries.ndim != 2 or summaries.shape[0] == 0:
            raise ValueError("node_heads requires at least one node")
        label_dists = torch.softmax(self.label(summaries), dim=-1)
        importance = torch.softmax(self.importance(summaries).squeeze(-1), dim=0)
        return label_dists, importance


def aggregate_label_tensor(
    node_label_dists: torch.Tensor, importance: torch.Tensor
) -> torch.Tensor:
    """Importance-weighted mixture of per-node label distributions."""
    if node_label_dists.shape[0] != importance.shape[0]:
        raise ValueError(
            f"{node_label_dists.shape[0]} node distributions but "
            f"{importance.shape[0]} importance weights"
        )
    return importance @ node_label_dists


@dataclass
class ForwardOutput:
    """Differentiable model outputs for one instance's node graph."""

    node_label_dists: torch.Tensor  # (nodes, 3)
    importance: torch.Tensor  # (nodes,)
    label_dist: torch.Tensor  # (3,)
    hop_attention: tuple[torch.Tensor, ...]  # num_hops × (nodes, nodes)

    def to_prediction(self, top_k: int) -> Prediction:
        importance = tuple(float(v) for v in self.importance.detach())
        return Prediction(
            label_dist=tuple(float(v) for v in self.label_dist.detach()),
            importance=importance,
            evidence=select_evidence(importance, top_k),
            hop_attention=tuple(
                tuple(tuple(float(v) for v in row) for row in matrix.detach())
                for matrix in self.hop_attention
            )
            or None,
        )


class VerifierNet(nn.Module):
    """The full model: encoder backend, hop stack, and dual heads.

    `num_hops = 0` skips the graph stage entirely, which by construction
    is the single-step model on the same parameters.
    """

    def __init__(self, config: VerifierConfig, tokenizer: WordTokenizer | None = None) -> None:
        super().__init__()
        self.config = config
        rng_state = torch.random.get_rng_state()
        torch.manual_seed(config.seed)
        try:
            if config.backend == "tiny-trainable":
                if tokenizer is None:
                    raise ConfigError("the tiny-trainable backend requires a tokenizer")
                self.backend: TinyBackend | PretrainedBackend = make_backend(
                    config.backend,
                    tokenizer,
                    hidden_size=config.encoder_hidden,
                    num_layers=config.encoder_layers,
                    num_heads=config.encoder_heads,
                    max_len=config.max_node_len,
                    seed=config.seed,
                )
            else:
                self.backend = make_backend(
                    config.backend,
                    model_name=config.pretrained_name,
                    max_len=config.max_node_len,
                )
            self.encoder_module = self.backend.module
            model_dim = self.backend.hidden_size
            self.hop_layers = nn.ModuleList(
                HopLayer(model_dim, config.hops.hop_hidden, config.hops.attention_heads)
                for _ in range(config.hops.num_hops)
            )
            self.heads = NodeHeads(model_dim)
        finally:
            torch.random.set_rng_state(rng_state)

    @classmethod
    def single_step(
        cls, config: VerifierConfig, tokenizer: WordTokenizer | None = None
    ) -> "VerifierNet":
        """The graph-free model: identical wiring with zero hop layers."""
        return cls(config.with_hops(0), tokenizer)

    @property
    def tokenizer(self):
        return self.backend.tokenizer

    def encode_instance(self, instance: Instance) -> NodeBatch:
        return build_nodes(
            instance,
            self.tokenizer,
            max_node_len=self.config.max_node_len,
            sentence_id_mode=self.config.sentence_id_mode,
        )

    def forward(self, batch: NodeBatch) -> ForwardOutput:
        reps = self.backend.encode(batch)
        summaries = reps.summaries
        attention = []
        for layer in self.hop_layers:
            summaries, alpha = layer(summaries)
            attention.append(alpha)
        node_label_dists, importance = self.heads(summaries)
        return ForwardOutput(
            node_label_dists=node_label_dists,
            importance=importance,
            label_dist=aggregate_label_tensor(node_label_dists, importance),
            hop_attention=tuple(attention),
        )

    def predict(self, instance: Instance, top_k: int | None = None) -> Prediction:
        with torch.no_grad():
            output = self.forward(self.encode_instance(instance))
        return output.to_prediction(self.config.top_k if top_k is None else top_k)


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_FORMAT = "hopcheck-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(model: VerifierNet, directory: str | Path) -> Path:
    """Write a versioned checkpoint directory; round-trips bit-exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if model.config.backend == "tiny-trainable":
        model.tokenizer.save(directory / "vocab.json")
        fingerprint = model.tokenizer.fingerprint()
    else:  # pragma: no cover - optional backend
        fingerprint = hashlib.sha256(model.config.pretrained_name.encode()).hexdigest()
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "vocab_fingerprint": fingerprint,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    torch.save(model.state_dict(), directory / "params.pt")
    return directory


def load_checkpoint(directory: str | Path) -> VerifierNet:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{directory} is not a model checkpoint")
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {manifest.get('version')}")
    config = VerifierConfig.from_dict(manifest["config"])
    tokenizer = None
    if config.backend == "tiny-trainable":
        tokenizer = WordTokenizer.load(directory / "vocab.json")
        if tokenizer.fingerprint() != manifest["vocab_fingerprint"]:
            raise ValueError("checkpoint vocabulary does not match its manifest fingerprint")
    model = VerifierNet(config, tokenizer)
    model.load_state_dict(torch.load(directory / "params.pt", weights_only=True))
    return model
