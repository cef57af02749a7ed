"""hopcheck: multi-hop fact checking of political claims.

A library and command-line tool covering the full pipeline: canonical
corpus handling and dataset adapters, evidence-chain splitting,
even-split and adversarial perturbations, random and TF-IDF+Naive-Bayes
baselines, a trainable graph-attention verifier with pluggable encoders,
staged training regimes, and the evaluation/analysis battery (label and
evidence metrics, joint score, sweeps, buckets, attention ratios,
statistical tests, corpus divergence, annotator agreement).
"""

from .analysis import (
    agreement,
    agreement_labels,
    agreement_sentences,
    fleiss_kappa,
    js_divergence,
    krippendorff_alpha,
    unigram_counts,
    welch_ttest,
)
from .adapters import AdapterConfig, AdapterError, ImportResult, import_dataset
from .baselines import (
    TfidfFeatureSpace,
    TfidfNaiveBayesModel,
    nb_train_predict,
    random_predict,
)
from .corpus import (
    LABELS,
    SPLITS,
    ArticleInstance,
    ChainInstance,
    CorpusError,
    ParseError,
    StatsReport,
    ValidationError,
    compute_stats,
    load_canonical,
    load_records,
    make_dev_split,
    save_canonical,
    save_records,
    split_chains,
    validate_dataset,
)
from .encoding import (
    ConfigError,
    NodeBatch,
    NodeRepresentations,
    TinyBackend,
    VocabularyError,
    WordTokenizer,
    build_nodes,
    make_backend,
)
from .estimator import (
    AdversarialTransformer,
    ChainVerifier,
    EvenSplitTransformer,
    RandomBaseline,
    TfidfNaiveBayes,
    validate_instances,
)
from .manifest import RunManifest
from .metrics import (
    ATTENTION_GROUPS,
    BUCKET_RULES,
    MetricsReport,
    PredictionRecord,
    attention_ratio_samples,
    attention_ratios,
    bucketed_report,
    compute_report,
    evidence_metrics,
    fever_score,
    gold_chains,
    gold_evidence_union,
    gold_label,
    instance_key,
    instance_prf,
    label_metrics,
    load_predictions,
    save_predictions,
    sweep_top_k,
)
from .perturb import (
    FallbackRecord,
    ReplacementPool,
    build_adversarial,
    build_even_split,
    derive_seed,
    extract_named_entities,
    ne_overlap,
)
from .prediction import DEFAULT_TOP_K, Prediction, aggregate_label, select_evidence
from .reasoner import (
    HopLayer,
    HopStackConfig,
    NodeHeads,
    VerifierConfig,
    VerifierNet,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    LOSS_MODES,
    PRESETS,
    SETTINGS,
    DatasetSplits,
    EpochRecord,
    ExperimentConfig,
    RegimeResult,
    compute_loss,
    default_learning_rate,
    evidence_loss,
    instance_loss,
    label_loss,
    preset_config,
    run_regime,
)

__version__ = "0.1.0"

__all__ = [
    "ATTENTION_GROUPS",
    "AdapterConfig",
    "AdapterError",
    "AdversarialTransformer",
    "ArticleInstance",
    "BUCKET_RULES",
    "ChainInstance",
    "ChainVerifier",
    "ConfigError",
    "CorpusError",
    "DEFAULT_TOP_K",
    "DatasetSplits",
    "EpochRecord",
    "EvenSplitTransformer",
    "ExperimentConfig",
    "FallbackRecord",
    "HopLayer",
    "HopStackConfig",
    "ImportResult",
    "LABELS",
    "LOSS_MODES",
    "MetricsReport",
    "NodeBatch",
    "NodeHeads",
    "NodeRepresentations",
    "PRESETS",
    "ParseError",
    "Prediction",
    "PredictionRecord",
    "RandomBaseline",
    "RegimeResult",
    "ReplacementPool",
    "RunManifest",
    "SETTINGS",
    "SPLITS",
    "StatsReport",
    "TfidfFeatureSpace",
    "TfidfNaiveBayes",
    "TfidfNaiveBayesModel",
    "TinyBackend",
    "ValidationError",
    "VerifierConfig",
    "VerifierNet",
    "VocabularyError",
    "WordTokenizer",
    "aggregate_label",
    "agreement",
    "agreement_labels",
    "agreement_sentences",
    "attention_ratio_samples",
    "attention_ratios",
    "bucketed_report",
    "build_adversarial",
    "build_even_split",
    "build_nodes",
    "compute_loss",
    "compute_report",
    "compute_stats",
    "default_learning_rate",
    "derive_seed",
    "evidence_loss",
    "evidence_metrics",
    "extract_named_entities",
    "fever_score",
    "fleiss_kappa",
    "gold_chains",
    "gold_evidence_union",
    "gold_label",
    "import_dataset",
    "instance_key",
    "instance_loss",
    "instance_prf",
    "js_divergence",
    "krippendorff_alpha",
    "label_loss",
    "label_metrics",
    "load_canonical",
    "load_checkpoint",
    "load_predictions",
    "load_records",
    "make_backend",
    "make_dev_split",
    "nb_train_predict",
    "ne_overlap",
    "preset_config",
    "random_predict",
    "run_regime",
    "save_canonical",
    "save_checkpoint",
    "save_predictions",
    "save_records",
    "select_evidence",
    "split_chains",
    "sweep_top_k",
    "unigram_counts",
    "validate_dataset",
    "validate_instances",
    "welch_ttest",
]
