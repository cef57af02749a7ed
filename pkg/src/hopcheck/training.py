"""Losses, multi-stage training regimes, early stopping, and history."""

from __future__ import annotations

import copy
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import torch

from .corpus import LABELS, ArticleInstance, ChainInstance
from .encoding import ConfigError, WordTokenizer
from .metrics import evidence_metrics, gold_chains, gold_evidence_union, label_metrics
from .prediction import DEFAULT_TOP_K
from .reasoner import ForwardOutput, HopStackConfig, VerifierConfig, VerifierNet, save_checkpoint

Instance = ArticleInstance | ChainInstance

LOSS_MODES = ("joint", "evi", "lab")
SETTINGS = ("full", "even", "adversarial")

_EPS = 1e-12


def label_loss(output: ForwardOutput, gold_label: str) -> torch.Tensor:
    """Negative log of the aggregated probability of the gold label."""
    if gold_label not in LABELS:
        raise ValueError(f"unknown label {gold_label!r}; expected one of {LABELS}")
    prob = output.label_dist[LABELS.index(gold_label)]
    return -torch.log(prob.clamp_min(_EPS))


def evidence_loss(output: ForwardOutput, gold_evidence: Sequence[int]) -> torch.Tensor:
    """Cross-entropy between the importance distribution and the uniform
    distribution over the gold evidence nodes."""
    gold = sorted(set(gold_evidence))
    if not gold:
        raise ValueError("evidence loss requires a non-empty gold evidence set")
    n = output.importance.shape[0]
    if any(not 0 <= g < n for g in gold):
        raise ValueError(f"gold evidence {gold} outside the {n} nodes")
    picked = output.importance[torch.tensor(gold, dtype=torch.long)]
    return -torch.log(picked.clamp_min(_EPS)).mean()


def compute_loss(
    output: ForwardOutput,
    gold_label: str,
    gold_evidence: Sequence[int],
    loss_mode: str = "joint",
) -> torch.Tensor:
    """joint = label + evidence (unweighted sum); evi and lab use one term."""
    if loss_mode not in LOSS_MODES:
        raise ValueError(f"unknown loss_mode {loss_mode!r}; expected one of {LOSS_MODES}")
    if loss_mode == "lab":
        return label_loss(output, gold_label)
    if loss_mode == "evi":
        return evidence_loss(output, gold_evidence)
    return label_loss(output, gold_label) + evidence_loss(output, gold_evidence)


def instance_loss(output: ForwardOutput, instance: Instance, loss_mode: str) -> torch.Tensor:
    """Per-instance loss; instances without annotated evidence fall back to
    the label-only term under evidence-using modes."""
    gold = sorted(gold_evidence_union(instance))
    if not gold and loss_mode != "evi":
        return label_loss(output, instance.label)
    return compute_loss(output, instance.label, gold, loss_mode)


# ---------------------------------------------------------------------------
# experiment configuration

CONFIG_FORMAT = "hopcheck-experiment"
CONFIG_VERSION = 1

PRESETS: dict[str, tuple[tuple[str, int], ...]] = {
    "liar_only": (("liar_plus", 4),),
    "politihop_only": (("politihop", 8),),
    "liar_then_politihop": (("liar_plus", 4), ("politihop", 4)),
    "fever_liar_politihop": (("fever", 2), ("liar_plus", 4), ("politihop", 4)),
}


def default_learning_rate(backend: str) -> float:
    """1e-5 for the pretrained backend; the tiny backend needs 1e-3."""
    return 1e-5 if backend == "pretrained-12x768" else 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    """A full training recipe: staged datasets plus model and loss knobs."""

    stages: tuple[tuple[str, int], ...] = PRESETS["politihop_only"]
    loss_mode: str = "joint"
    hops: int = 3
    top_k: int = DEFAULT_TOP_K
    seed: int = 42
    learning_rate: float | None = None
    backend: str = "tiny-trainable"
    sentence_id_mode: bool = False
    setting: str = "full"
    hop_hidden: int = 64
    attention_heads: int = 1
    encoder_hidden: int = 32
    encoder_layers: int = 2
    encoder_heads: int = 2
    max_node_len: int = 128
    max_vocab: int | None = None

    def __post_init__(self) -> None:
        if not self.stages:
            raise ConfigError("at least one training stage is required")
        for stage in self.stages:
            dataset, epochs = stage
            if not isinstance(dataset, str) or not dataset:
                raise ConfigError(f"bad stage dataset id {dataset!r}")
            if epochs < 1:
                raise ConfigError(f"stage {dataset!r} needs at least 1 epoch, got {epochs}")
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.setting not in SETTINGS:
            raise ConfigError(f"setting must be one of {SETTINGS}, got {self.setting!r}")

    @property
    def effective_learning_rate(self) -> float:
        return self.learning_rate if self.learning_rate is not None else default_learning_rate(
            self.backend
        )

    @property
    def target_dataset(self) -> str:
        """The last stage's dataset: dev evaluation and early stopping key
        off this dataset's dev split."""
        return self.stages[-1][0]

    def preset_name(self) -> str | None:
        """The named preset these stages correspond to, if any."""
        for name, stages in PRESETS.items():
            if tuple(self.stages) == stages:
                return name
        return None

    def verifier_config(self) -> VerifierConfig:
        return VerifierConfig(
            backend=self.backend,
            hops=HopStackConfig(
                num_hops=self.hops,
                hop_hidden=self.hop_hidden,
                attention_heads=self.attention_heads,
            ),
            top_k=self.top_k,
            max_node_len=self.max_node_len,
            sentence_id_mode=self.sentence_id_mode,
            seed=self.seed,
            encoder_hidden=self.encoder_hidden,
            encoder_layers=self.encoder_layers,
            encoder_heads=self.encoder_heads,
        )

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["stages"] = [list(stage) for stage in self.stages]
        return {"format": CONFIG_FORMAT, "version": CONFIG_VERSION, **payload}

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        data = dict(payload)
        if data.pop("format", CONFIG_FORMAT) != CONFIG_FORMAT:
            raise ConfigError("not an experiment config payload")
        data.pop("version", None)
        data["stages"] = tuple((str(d), int(e)) for d, e in data["stages"])
        return cls(**data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return ExperimentConfig(stages=PRESETS[name], **overrides)


# ---------------------------------------------------------------------------
# the regime runner


@dataclass(frozen=True)
class DatasetSplits:
    """Train/dev material for one dataset id."""

    train: tuple[Instance, ...]
    dev: tuple[Instance, ...]


@dataclass
class EpochRecord:
    stage: int
    dataset: str
    epoch: int
    mean_loss: float
    dev_label_macro_f1: float
    dev_evidence_f1: float
    selection_metric: float
    is_best: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RegimeResult:
    model: VerifierNet
    history: list[EpochRecord]
    best_record: EpochRecord | None


def _dev_metrics(model: VerifierNet, dev: Sequence[Instance], top_k: int) -> tuple[float, float]:
    model.eval()
    gold_labels, pred_labels = [], []
    pred_sets, chain_lists = [], []
    for instance in dev:
        prediction = model.predict(instance, top_k=top_k)
        gold_labels.append(instance.label)
        pred_labels.append(prediction.label)
        pred_sets.append(set(prediction.evidence))
        chain_lists.append(gold_chains(instance))
    macro_f1, _ = label_metrics(pred_labels, gold_labels)
    ev_f1, _, _ = evidence_metrics(pred_sets, chain_lists)
    return macro_f1, ev_f1


def run_regime(
    config: ExperimentConfig,
    datasets: Mapping[str, DatasetSplits],
    tokenizer: WordTokenizer | None = None,
    history_path: str | Path | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RegimeResult:
    """Execute the staged regime and retain the best-dev-metric checkpoint.

    Every epoch ends with an evaluation on the final stage's dev split;
    the retained model maximizes label macro-F1 there (evidence F1 when
    loss_mode is "evi"). All shuffling and initialization is seeded, so a
    rerun with the same config reproduces the history exactly.
    """
    missing = [d for d, _ in config.stages if d not in datasets]
    if missing:
        raise ValueError(f"missing datasets for stages: {missing}")
    target_dev = datasets[config.target_dataset].dev
    if not target_dev:
        raise ValueError(f"dataset {config.target_dataset!r} has an empty dev split")
    for dataset_id, _ in config.stages:
        if not datasets[dataset_id].train:
            raise ValueError(f"dataset {dataset_id!r} has an empty train split")

    if tokenizer is None:
        texts: list[str] = []
        seen: set[str] = set()
        for dataset_id, _ in config.stages:
            if dataset_id in seen:
                continue
            seen.add(dataset_id)
            for instance in datasets[dataset_id].train:
                texts.append(instance.claim)
                texts.append(instance.speaker)
                texts.extend(instance.sentences)
        tokenizer = WordTokenizer.from_texts(texts, max_vocab=config.max_vocab)

    torch.manual_seed(config.seed)
    model = VerifierNet(config.verifier_config(), tokenizer)

    history: list[EpochRecord] = []
    best_record: EpochRecord | None = None
    best_state: dict | None = None

    for stage_index, (dataset_id, epochs) in enumerate(config.stages):
        train = list(datasets[dataset_id].train)
        optimizer = torch.optim.Adam(model.parameters(), lr=config.effective_learning_rate)
        for epoch in range(1, epochs + 1):
            order = list(range(len(train)))
            random.Random(f"{config.seed}:{stage_index}:{epoch}").shuffle(order)
            model.train()
            total_loss = 0.0
            for index in order:
                instance = train[index]
                optimizer.zero_grad()
                output = model(model.encode_instance(instance))
                loss = instance_loss(output, instance, config.loss_mode)
                loss.backward()
                optimizer.step()
                total_loss += float(loss.detach())
            macro_f1, ev_f1 = _dev_metrics(model, target_dev, config.top_k)
            selection = ev_f1 if config.loss_mode == "evi" else macro_f1
            record = EpochRecord(
                stage=stage_index,
                dataset=dataset_id,
                epoch=epoch,
                mean_loss=total_loss / max(len(train), 1),
                dev_label_macro_f1=macro_f1,
                dev_evidence_f1=ev_f1,
                selection_metric=selection,
                is_best=False,
            )
            if best_record is None or selection > best_record.selection_metric:
                record.is_best = True
                best_record = record
                best_state = copy.deepcopy(model.state_dict())
            history.append(record)

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()

    if history_path is not None:
        with open(history_path, "w", encoding="utf-8") as handle:
            for record in history:
                handle.write(json.dumps(record.to_dict()) + "\n")
    if checkpoint_dir is not None:
        save_checkpoint(model, checkpoint_dir)

    return RegimeResult(model=model, history=history, best_record=best_record)
