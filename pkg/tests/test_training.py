"""Loss functions, experiment configs, and the staged training regime."""

import json
import math

import pytest
import torch

from hopcheck import (
    ArticleInstance,
    ConfigError,
    DatasetSplits,
    ExperimentConfig,
    PRESETS,
    WordTokenizer,
    compute_loss,
    default_learning_rate,
    evidence_loss,
    instance_loss,
    label_loss,
    load_checkpoint,
    preset_config,
    run_regime,
)
from hopcheck.reasoner import ForwardOutput


def fixed_output(label_dist, importance) -> ForwardOutput:
    label_t = torch.tensor(label_dist, dtype=torch.float64)
    importance_t = torch.tensor(importance, dtype=torch.float64)
    return ForwardOutput(
        node_label_dists=label_t.expand(len(importance), 3).clone(),
        importance=importance_t,
        label_dist=label_t,
        hop_attention=(),
    )


# ---------------------------------------------------------------------------
# losses


def test_label_loss_ln2_oracle():
    output = fixed_output([0.5, 0.25, 0.25], [1.0])
    assert float(label_loss(output, "false")) == pytest.approx(math.log(2), rel=1e-12)
    assert float(label_loss(output, "true")) == pytest.approx(math.log(4), rel=1e-12)


def test_label_loss_unknown_label():
    with pytest.raises(ValueError, match="unknown label"):
        label_loss(fixed_output([1, 0, 0], [1.0]), "mostly-true")


def test_label_loss_zero_probability_is_finite():
    value = float(label_loss(fixed_output([1.0, 0.0, 0.0], [1.0]), "true"))
    assert math.isfinite(value) and value > 20


def test_evidence_loss_uniform_target_oracle():
    output = fixed_output([1, 0, 0], [0.5, 0.25, 0.25])
    assert float(evidence_loss(output, [0])) == pytest.approx(math.log(2), rel=1e-12)
    expected = (math.log(2) + math.log(4)) / 2
    assert float(evidence_loss(output, [0, 1])) == pytest.approx(expected, rel=1e-12)
    # duplicates collapse to the set
    assert float(evidence_loss(output, [0, 0])) == pytest.approx(math.log(2), rel=1e-12)


def test_evidence_loss_errors():
    output = fixed_output([1, 0, 0], [0.5, 0.5])
    with pytest.raises(ValueError, match="non-empty"):
        evidence_loss(output, [])
    with pytest.raises(ValueError, match="outside"):
        evidence_loss(output, [5])


def test_compute_loss_modes():
    output = fixed_output([0.5, 0.25, 0.25], [0.5, 0.25, 0.25])
    lab = float(compute_loss(output, "false", [0], "lab"))
    evi = float(compute_loss(output, "false", [0], "evi"))
    joint = float(compute_loss(output, "false", [0], "joint"))
    assert joint == pytest.approx(lab + evi, rel=1e-12)
    assert joint >= max(lab, evi)
    with pytest.raises(ValueError, match="loss_mode"):
        compute_loss(output, "false", [0], "both")


def test_instance_loss_uses_evidence_union(articles):
    output = fixed_output([0.5, 0.25, 0.25], [0.2] * 5)
    a1 = articles[0]  # label false, union {0, 1}
    want = float(label_loss(output, "false")) + float(evidence_loss(output, [0, 1]))
    assert float(instance_loss(output, a1, "joint")) == pytest.approx(want, rel=1e-12)


def test_instance_loss_label_fallback_without_evidence():
    bare = ArticleInstance(
        id="b1",
        claim="c",
        speaker="s",
        label="true",
        sentences=("only sentence.",),
        evidence_chains=(),
        split="train",
    )
    output = fixed_output([0.25, 0.25, 0.5], [1.0])
    assert float(instance_loss(output, bare, "joint")) == pytest.approx(
        math.log(2), rel=1e-12
    )
    with pytest.raises(ValueError, match="non-empty"):
        instance_loss(output, bare, "evi")


# ---------------------------------------------------------------------------
# experiment configuration


def test_config_round_trip(tmp_path):
    config = ExperimentConfig(stages=(("demo", 2),), hops=1, learning_rate=0.01)
    path = tmp_path / "experiment.json"
    config.save(path)
    assert ExperimentConfig.load(path) == config
    with pytest.raises(ConfigError, match="experiment config"):
        ExperimentConfig.from_dict({"format": "other", "stages": [["d", 1]]})


def test_config_validation():
    with pytest.raises(ConfigError, match="stage"):
        ExperimentConfig(stages=())
    with pytest.raises(ConfigError, match="epoch"):
        ExperimentConfig(stages=(("demo", 0),))
    with pytest.raises(ConfigError, match="loss_mode"):
        ExperimentConfig(loss_mode="all")
    with pytest.raises(ConfigError, match="setting"):
        ExperimentConfig(setting="hard")


def test_learning_rate_defaults():
    assert default_learning_rate("tiny-trainable") == 1e-3
    assert default_learning_rate("pretrained-12x768") == 1e-5
    assert ExperimentConfig().effective_learning_rate == 1e-3
    assert ExperimentConfig(backend="pretrained-12x768").effective_learning_rate == 1e-5
    assert ExperimentConfig(learning_rate=0.5).effective_learning_rate == 0.5


def test_target_dataset_is_last_stage():
    config = ExperimentConfig(stages=(("a", 1), ("b", 2)))
    assert config.target_dataset == "b"


def test_preset_mapping():
    assert preset_config("politihop_only").stages == (("politihop", 8),)
    assert preset_config("fever_liar_politihop").stages == (
        ("fever", 2),
        ("liar_plus", 4),
        ("politihop", 4),
    )
    assert preset_config("liar_then_politihop").preset_name() == "liar_then_politihop"
    assert ExperimentConfig(stages=(("demo", 1),)).preset_name() is None
    with pytest.raises(ConfigError, match="preset"):
        preset_config("everything")
    assert set(PRESETS) == {
        "liar_only",
        "politihop_only",
        "liar_then_politihop",
        "fever_liar_politihop",
    }


# ---------------------------------------------------------------------------
# the regime runner


def small_config(**overrides) -> ExperimentConfig:
    defaults = dict(
        stages=(("demo", 1),),
        hops=1,
        hop_hidden=8,
        encoder_hidden=16,
        encoder_layers=1,
        encoder_heads=2,
        top_k=2,
        seed=3,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


@pytest.fixture
def demo_datasets(chains):
    # article a4 is the fixture corpus's dev article
    train = tuple(c for c in chains if c.article_id != "a4")
    dev = tuple(c for c in chains if c.article_id == "a4")
    return {"demo": DatasetSplits(train=train, dev=dev)}


def test_run_regime_plumbing(tmp_path, demo_datasets):
    history_path = tmp_path / "history.jsonl"
    checkpoint_dir = tmp_path / "checkpoint"
    result = run_regime(
        small_config(),
        demo_datasets,
        history_path=history_path,
        checkpoint_dir=checkpoint_dir,
    )
    assert len(result.history) == 1
    record = result.history[0]
    assert (record.stage, record.dataset, record.epoch) == (0, "demo", 1)
    assert record.is_best and result.best_record == record
    assert math.isfinite(record.mean_loss)
    assert not result.model.training  # left in evaluation mode
    lines = [json.loads(l) for l in history_path.read_text().splitlines()]
    assert lines == [record.to_dict()]
    restored = load_checkpoint(checkpoint_dir)
    for key, value in result.model.state_dict().items():
        assert torch.equal(value, restored.state_dict()[key]), key


def test_run_regime_bitwise_deterministic(demo_datasets):
    first = run_regime(small_config(stages=(("demo", 2),)), demo_datasets)
    second = run_regime(small_config(stages=(("demo", 2),)), demo_datasets)
    assert [r.to_dict() for r in first.history] == [r.to_dict() for r in second.history]
    for key, value in first.model.state_dict().items():
        assert torch.equal(value, second.model.state_dict()[key]), key


def test_run_regime_best_is_earliest_maximum(demo_datasets):
    result = run_regime(small_config(stages=(("demo", 3),)), demo_datasets)
    metrics = [r.selection_metric for r in result.history]
    assert result.best_record.selection_metric == max(metrics)
    first_max_epoch = metrics.index(max(metrics)) + 1
    assert result.best_record.epoch == first_max_epoch
    assert sum(1 for r in result.history if r.is_best) >= 1


def test_run_regime_two_stages(demo_datasets):
    datasets = dict(demo_datasets)
    datasets["other"] = demo_datasets["demo"]
    config = small_config(stages=(("other", 1), ("demo", 1)))
    result = run_regime(config, datasets)
    assert [(r.stage, r.dataset) for r in result.history] == [(0, "other"), (1, "demo")]


def test_run_regime_evidence_selection_metric(demo_datasets):
    result = run_regime(small_config(loss_mode="evi"), demo_datasets)
    for record in result.history:
        assert record.selection_metric == record.dev_evidence_f1


def test_run_regime_uses_supplied_tokenizer(demo_datasets, tokenizer):
    result = run_regime(small_config(), demo_datasets, tokenizer=tokenizer)
    assert result.model.tokenizer.words == tokenizer.words


def test_run_regime_missing_dataset(demo_datasets):
    with pytest.raises(ValueError, match="missing datasets.*other"):
        run_regime(small_config(stages=(("other", 1),)), demo_datasets)


def test_run_regime_empty_splits(demo_datasets):
    train = demo_datasets["demo"].train
    dev = demo_datasets["demo"].dev
    with pytest.raises(ValueError, match="empty dev"):
        run_regime(small_config(), {"demo": DatasetSplits(train=train, dev=())})
    with pytest.raises(ValueError, match="empty train"):
        run_regime(small_config(), {"demo": DatasetSplits(train=(), dev=dev)})
