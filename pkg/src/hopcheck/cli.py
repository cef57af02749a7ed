"""Command-line interface: dataset management, training, evaluation, and
the statistical analyses, with a run manifest next to every artifact."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .adapters import AdapterConfig, AdapterError, SOURCE_FORMATS, import_dataset
from .analysis import agreement_labels, agreement_sentences, js_divergence, welch_ttest
from .baselines import TfidfNaiveBayesModel, TfidfFeatureSpace
from .corpus import (
    ArticleInstance,
    CorpusError,
    article_from_record,
    chain_from_record,
    compute_stats,
    load_records,
    make_dev_split,
    save_canonical,
    save_records,
    split_chains,
    validate_dataset,
)
from .encoding import ConfigError
from .estimator import AdversarialTransformer, EvenSplitTransformer, RandomBaseline
from .manifest import RunManifest, config_hash, fingerprint_file, manifest_path_for
from .metrics import (
    BUCKET_RULES,
    PredictionRecord,
    attention_ratio_samples,
    attention_ratios,
    bucketed_report,
    compute_report,
    gold_chains,
    gold_evidence_union,
    instance_key,
    load_predictions,
    save_predictions,
    sweep_top_k,
)
from .perturb import ReplacementPool
from .reasoner import VerifierNet, load_checkpoint
from .training import (
    LOSS_MODES,
    PRESETS,
    SETTINGS,
    DatasetSplits,
    ExperimentConfig,
    preset_config,
    run_regime,
)

CACHE_ENV_VAR = "HOPCHECK_CACHE_DIR"
BACKEND_CHOICES = {"tiny": "tiny-trainable", "pretrained-12x768": "pretrained-12x768"}

logger = logging.getLogger("hopcheck")


# ---------------------------------------------------------------------------
# shared helpers


def _apply_cache_env() -> None:
    cache = os.environ.get(CACHE_ENV_VAR)
    if cache:
        os.environ.setdefault("HF_HOME", cache)
        os.environ.setdefault("TRANSFORMERS_CACHE", cache)


def _write_manifest(
    command: str,
    config: dict,
    seed: int,
    inputs: dict[str, str | Path],
    out: str | Path,
    preset_deviation: str | None = None,
) -> None:
    manifest = RunManifest(
        command=command,
        config_hash=config_hash(config),
        seed=seed,
        dataset_fingerprints={
            str(name): fingerprint_file(path) for name, path in inputs.items()
        },
        preset_deviation=preset_deviation,
    )
    manifest.finish().write(manifest_path_for(out))


def _model_predictions(
    model: VerifierNet, instances, top_k: int
) -> list[PredictionRecord]:
    records = []
    for instance in instances:
        p = model.predict(instance, top_k=top_k)
        records.append(
            PredictionRecord(
                instance_id=instance_key(instance),
                label=p.label,
                label_dist=tuple(float(v) for v in p.label_dist),
                evidence=tuple(p.evidence),
                importance=tuple(float(v) for v in p.importance),
            )
        )
    return records


def _aligned_predictions(records, instances) -> list[PredictionRecord]:
    by_id = {r.instance_id: r for r in records}
    ordered = []
    for instance in instances:
        key = instance_key(instance)
        if key not in by_id:
            raise ValueError(f"no prediction recorded for instance {key!r}")
        ordered.append(by_id[key])
    return ordered


def _load_eval_inputs(args) -> tuple[list, list[PredictionRecord], int, dict]:
    """Instances + aligned predictions from either a checkpoint or a
    predictions file; returns (instances, predictions, k, input paths)."""
    instances = load_records(args.dataset)
    inputs: dict[str, str] = {"dataset": args.dataset}
    if args.checkpoint:
        model = load_checkpoint(args.checkpoint)
        k = args.topk if args.topk is not None else model.config.top_k
        predictions = _model_predictions(model, instances, k)
        inputs["checkpoint"] = str(Path(args.checkpoint) / "params.pt")
    elif args.predictions:
        k = args.topk if args.topk is not None else 6
        predictions = _aligned_predictions(load_predictions(args.predictions), instances)
        inputs["predictions"] = args.predictions
    else:
        raise ValueError("provide --checkpoint or --predictions")
    return instances, predictions, k, inputs


def _write_json(payload: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_import(args) -> int:
    mapping = AdapterConfig.load(args.config) if args.config else None
    result = import_dataset(args.source, args.dataset, mapping, default_split=args.split)
    save_canonical(result.instances, args.out)
    print(f"imported {len(result.instances)} instance(s), skipped {result.skipped}")
    for reason in result.skip_reasons[:10]:
        print(f"  skipped: {reason}")
    if result.skipped > 10:
        print(f"  ... and {result.skipped - 10} more")
    _write_manifest(
        "import",
        {"source": args.source, "split": args.split, "adapter": mapping.to_dict() if mapping else None},
        args.seed,
        {"dataset": args.dataset},
        args.out,
    )
    return 0


def cmd_validate(args) -> int:
    problems: list[str] = []
    instances = []
    with open(args.dataset, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            where = f"{args.dataset}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as error:
                problems.append(f"{where}: not valid JSON ({error.msg})")
                continue
            try:
                if "chain_id" in record:
                    instances.append(chain_from_record(record, where))
                else:
                    instances.append(article_from_record(record, where))
            except CorpusError as error:
                problems.append(str(error))
    problems.extend(validate_dataset(instances))
    if problems:
        for problem in problems:
            print(problem, file=sys.stderr)
        print(f"{len(problems)} violation(s) in {args.dataset}", file=sys.stderr)
        return 1
    print(f"OK: {len(instances)} instance(s), 0 violations")
    return 0


def cmd_stats(args) -> int:
    instances = load_records(args.dataset)
    articles = [i for i in instances if isinstance(i, ArticleInstance)]
    if len(articles) != len(instances):
        raise CorpusError("stats requires article-level data (found chain instances)")
    report = compute_stats(articles)
    payload = report.to_dict()
    print(json.dumps(payload, indent=2))
    if args.out:
        _write_json(payload, args.out)
        _write_manifest("stats", {}, args.seed, {"dataset": args.dataset}, args.out)
    return 0


def cmd_split_chains(args) -> int:
    instances = load_records(args.dataset)
    articles = [i for i in instances if isinstance(i, ArticleInstance)]
    if len(articles) != len(instances):
        raise CorpusError("split-chains expects article-level input")
    chains = split_chains(articles)
    if args.dev_chains is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        train, dev = make_dev_split(chains, args.dev_chains, args.seed)
        save_records(train, out_dir / "train.jsonl")
        save_records(dev, out_dir / "dev.jsonl")
        print(
            f"{len(chains)} chain(s) from {len(articles)} article(s) -> "
            f"{len(train)} train / {len(dev)} dev"
        )
        _write_manifest(
            "split-chains",
            {"dev_chains": args.dev_chains},
            args.seed,
            {"dataset": args.dataset},
            out_dir,
        )
    else:
        save_records(chains, args.out)
        print(f"{len(chains)} chain(s) from {len(articles)} article(s)")
        _write_manifest(
            "split-chains", {}, args.seed, {"dataset": args.dataset}, args.out
        )
    return 0


def cmd_even_split(args) -> int:
    instances = load_records(args.dataset)
    transformer = EvenSplitTransformer(seed=args.seed).fit(instances)
    save_records(transformer.transform(instances), args.out)
    print(f"even split of {len(instances)} instance(s) written to {args.out}")
    _write_manifest("even-split", {}, args.seed, {"dataset": args.dataset}, args.out)
    return 0


def cmd_adversarial(args) -> int:
    instances = load_records(args.dataset)
    inputs: dict[str, str] = {"dataset": args.dataset}
    if args.pool:
        pool = ReplacementPool.from_file(args.pool)
        inputs["pool"] = args.pool
    elif args.pool_source:
        pool = ReplacementPool.from_articles(load_records(args.pool_source))
        inputs["pool_source"] = args.pool_source
    else:
        raise ValueError("provide --pool (a pool file) or --pool-source (a dataset to draw from)")
    transformer = AdversarialTransformer(pool=pool, seed=args.seed).fit(instances)
    save_records(transformer.transform(instances), args.out)
    fallbacks = transformer.fallbacks_
    print(
        f"adversarial variant of {len(instances)} instance(s) written to {args.out}; "
        f"{len(fallbacks)} fallback(s)"
    )
    if fallbacks:
        log_path = Path(args.out).with_name(Path(args.out).name + ".fallbacks.jsonl")
        with open(log_path, "w", encoding="utf-8") as handle:
            for record in fallbacks:
                handle.write(json.dumps(dataclasses.asdict(record)) + "\n")
        print(f"fallback log written to {log_path}")
    _write_manifest("adversarial", {}, args.seed, inputs, args.out)
    return 0


def cmd_baseline(args) -> int:
    instances = load_records(args.dataset)
    inputs: dict[str, str] = {"dataset": args.dataset}
    if args.kind == "random":
        predictions = RandomBaseline(seed=args.seed).fit().predictions(instances)
    else:
        if not args.train:
            raise ValueError("the tfidf-nb baseline requires --train")
        train = load_records(args.train)
        inputs["train"] = args.train
        model = TfidfNaiveBayesModel(feature_space=TfidfFeatureSpace()).fit(train)
        predictions = model.predictions(instances)
    records = [
        PredictionRecord(
            instance_id=instance_key(instance),
            label=p.label,
            label_dist=tuple(float(v) for v in p.label_dist),
            evidence=tuple(p.evidence),
            importance=tuple(float(v) for v in p.importance),
        )
        for instance, p in zip(instances, predictions)
    ]
    save_predictions(records, args.out)
    print(f"{args.kind} predictions for {len(records)} instance(s) written to {args.out}")
    _write_manifest("baseline", {"kind": args.kind}, args.seed, inputs, args.out)
    return 0


def _stage_file(data_dir: Path, dataset_id: str, setting: str, split: str) -> Path:
    name = (
        f"{dataset_id}.{split}.jsonl"
        if setting == "full"
        else f"{dataset_id}.{setting}.{split}.jsonl"
    )
    return data_dir / name


def cmd_train(args) -> int:
    if args.config:
        config = ExperimentConfig.load(args.config)
    elif args.preset:
        config = preset_config(args.preset)
    else:
        raise ValueError("provide --preset or --config")

    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.hops is not None:
        overrides["hops"] = args.hops
    if args.topk is not None:
        overrides["top_k"] = args.topk
    if args.loss is not None:
        overrides["loss_mode"] = args.loss
    if args.lr is not None:
        overrides["learning_rate"] = args.lr
    if args.backend is not None:
        overrides["backend"] = BACKEND_CHOICES[args.backend]
    if args.sentence_ids:
        overrides["sentence_id_mode"] = True
    if args.setting is not None:
        overrides["setting"] = args.setting
    if overrides:
        config = dataclasses.replace(config, **overrides)

    data_dir = Path(args.data_dir)
    datasets: dict[str, DatasetSplits] = {}
    inputs: dict[str, Path] = {}
    for dataset_id, _ in config.stages:
        if dataset_id in datasets:
            continue
        train_path = _stage_file(data_dir, dataset_id, config.setting, "train")
        if not train_path.exists():
            raise FileNotFoundError(f"missing dataset file {train_path}")
        inputs[f"{dataset_id}.train"] = train_path
        dev_path = _stage_file(data_dir, dataset_id, config.setting, "dev")
        dev: tuple = ()
        if dev_path.exists():
            dev = tuple(load_records(dev_path))
            inputs[f"{dataset_id}.dev"] = dev_path
        datasets[dataset_id] = DatasetSplits(
            train=tuple(load_records(train_path)), dev=dev
        )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_regime(
        config,
        datasets,
        history_path=out_dir / "history.jsonl",
        checkpoint_dir=out_dir / "checkpoint",
    )
    config.save(out_dir / "experiment.json")

    preset = config.preset_name()
    deviation = (
        None
        if preset
        else f"stages {[list(s) for s in config.stages]} do not match a named preset"
    )
    best = result.best_record
    if best is not None:
        print(
            f"best epoch: stage {best.stage} ({best.dataset}) epoch {best.epoch}, "
            f"selection metric {best.selection_metric:.4f}"
        )
    print(f"checkpoint written to {out_dir / 'checkpoint'}")
    _write_manifest(
        "train", config.to_dict(), config.seed, inputs, out_dir, preset_deviation=deviation
    )
    return 0


def cmd_evaluate(args) -> int:
    instances, predictions, k, inputs = _load_eval_inputs(args)
    if args.predictions_out:
        save_predictions(predictions, args.predictions_out)
    rules = args.bucket or []
    if rules:
        report = compute_report(predictions, instances, k)
        for rule in rules:
            with_buckets = bucketed_report(predictions, instances, rule, k)
            report.buckets.update(
                {f"{rule}:{name}": sub for name, sub in with_buckets.buckets.items()}
            )
            report.bucket_counts.update(
                {f"{rule}:{name}": n for name, n in with_buckets.bucket_counts.items()}
            )
    else:
        report = compute_report(predictions, instances, k)
    payload = report.to_dict()
    print(json.dumps(payload, indent=2))
    _write_json(payload, args.out)
    _write_manifest("evaluate", {"k": k, "buckets": rules}, args.seed, inputs, args.out)
    return 0


def cmd_sweep_k(args) -> int:
    instances, predictions, _, inputs = _load_eval_inputs(args)
    chains = [gold_chains(i) for i in instances]
    importances = [p.importance for p in predictions]
    rows = sweep_top_k(importances, chains, range(args.k_min, args.k_max + 1))
    payload = {"sweep": rows}
    print(json.dumps(payload, indent=2))
    _write_json(payload, args.out)
    _write_manifest(
        "sweep-k", {"k_min": args.k_min, "k_max": args.k_max}, args.seed, inputs, args.out
    )
    return 0


def cmd_analyze(args) -> int:
    instances = load_records(args.dataset)
    model = load_checkpoint(args.checkpoint)
    if model.config.hops.num_hops < 1:
        raise ConfigError("analyze needs a model with at least one hop layer")
    matrices, masks = [], []
    for instance in instances:
        prediction = model.predict(instance)
        matrices.append(np.asarray(prediction.hop_attention[-1], dtype=float))
        evidence = gold_evidence_union(instance)
        masks.append([i in evidence for i in range(len(instance.sentences))])
    ratios = attention_ratios(matrices, masks)
    samples = attention_ratio_samples(matrices, masks)
    toward_evidence = samples["evi->evi"] + samples["nonevi->evi"]
    toward_other = samples["evi->nonevi"] + samples["nonevi->nonevi"]
    payload: dict = {
        "attention_ratios": ratios,
        "group_sizes": {name: len(values) for name, values in samples.items()},
    }
    if len(toward_evidence) >= 2 and len(toward_other) >= 2:
        t, p = welch_ttest(toward_evidence, toward_other)
        payload["welch_ttest"] = {
            "groups": "edges toward evidence vs edges toward non-evidence",
            "t": t,
            "p": p,
        }
    print(json.dumps(payload, indent=2))
    _write_json(payload, args.out)
    _write_manifest(
        "analyze",
        {"hops": model.config.hops.num_hops},
        args.seed,
        {"dataset": args.dataset, "checkpoint": str(Path(args.checkpoint) / "params.pt")},
        args.out,
    )
    return 0


def _divergence_texts(instances, which: str) -> list[str]:
    claims = [i.claim for i in instances]
    sentences = [s for i in instances for s in i.sentences]
    if which == "claims":
        return claims
    if which == "sentences":
        return sentences
    return claims + sentences


def cmd_divergence(args) -> int:
    a = load_records(args.dataset_a)
    b = load_records(args.dataset_b)
    value = js_divergence(_divergence_texts(a, args.field), _divergence_texts(b, args.field))
    payload = {
        "js_divergence": value,
        "field": args.field,
        "dataset_a": args.dataset_a,
        "dataset_b": args.dataset_b,
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        _write_json(payload, args.out)
        _write_manifest(
            "divergence",
            {"field": args.field},
            args.seed,
            {"dataset_a": args.dataset_a, "dataset_b": args.dataset_b},
            args.out,
        )
    return 0


def cmd_agreement(args) -> int:
    payload = json.loads(Path(args.annotations).read_text(encoding="utf-8"))
    if args.mode == "label":
        codings = payload["codings"] if isinstance(payload, dict) else payload
        kappa, alpha = agreement_labels(codings)
    else:
        articles = [
            (entry["sentence_count"], entry["raters"]) for entry in payload["articles"]
        ]
        kappa, alpha = agreement_sentences(articles)
    result = {"mode": args.mode, "fleiss_kappa": kappa, "krippendorff_alpha": alpha}
    print(json.dumps(result, indent=2))
    if args.out:
        _write_json(result, args.out)
        _write_manifest(
            "agreement", {"mode": args.mode}, args.seed, {"annotations": args.annotations}, args.out
        )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopcheck",
        description="Multi-hop fact checking of political claims: datasets, "
        "models, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
        return p

    p = add("import", cmd_import, "convert a source dataset to the canonical format")
    p.add_argument("--source", required=True, choices=SOURCE_FORMATS)
    p.add_argument("--dataset", required=True, help="source file")
    p.add_argument("--out", required=True, help="canonical JSONL output")
    p.add_argument("--config", help="adapter config JSON (defaults per source)")
    p.add_argument("--split", default="train", choices=("train", "dev", "test"))

    p = add("validate", cmd_validate, "check a canonical file against the data contract")
    p.add_argument("--dataset", required=True)

    p = add("stats", cmd_stats, "dataset statistics (labels, lengths, chain histogram)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="also write the report as JSON")

    p = add("split-chains", cmd_split_chains, "one training instance per evidence chain")
    p.add_argument("--dataset", required=True, help="article-level canonical JSONL")
    p.add_argument("--out", required=True, help="output file (or directory with --dev-chains)")
    p.add_argument(
        "--dev-chains",
        type=int,
        help="carve an article-grouped dev split with exactly this many chains",
    )

    p = add("even-split", cmd_even_split, "cap non-evidence sentences per instance")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    p = add("adversarial", cmd_adversarial, "swap non-evidence for entity-sharing sentences")
    p.add_argument("--dataset", required=True, help="even-split canonical JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--pool", help="replacement pool file (TSV)")
    p.add_argument("--pool-source", help="dataset JSONL to build the pool from")

    p = add("baseline", cmd_baseline, "run a reference system and save its predictions")
    p.add_argument("--kind", required=True, choices=("random", "tfidf-nb"))
    p.add_argument("--dataset", required=True, help="instances to predict")
    p.add_argument("--train", help="training instances (tfidf-nb only)")
    p.add_argument("--out", required=True, help="predictions JSONL")

    p = add("train", cmd_train, "train a verifier with a staged regime")
    p.set_defaults(seed=None)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="experiment config JSON (alternative to --preset)")
    p.add_argument("--data-dir", required=True, help="directory of <dataset>.<split>.jsonl files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--setting", choices=SETTINGS)
    p.add_argument("--hops", type=int)
    p.add_argument("--topk", type=int)
    p.add_argument("--loss", choices=LOSS_MODES)
    p.add_argument("--lr", type=float)
    p.add_argument("--backend", choices=sorted(BACKEND_CHOICES))
    p.add_argument("--sentence-ids", action="store_true", help="prepend per-sentence id tokens")

    p = add("evaluate", cmd_evaluate, "full metric report for a checkpoint or predictions")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", help="model checkpoint directory")
    p.add_argument("--predictions", help="predictions JSONL (alternative to --checkpoint)")
    p.add_argument("--out", required=True, help="report JSON")
    p.add_argument("--topk", type=int)
    p.add_argument("--bucket", action="append", choices=BUCKET_RULES, help="repeatable")
    p.add_argument("--predictions-out", help="also save the predictions JSONL")

    p = add("sweep-k", cmd_sweep_k, "evidence metrics for each k in a range")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--predictions")
    p.add_argument("--out", required=True)
    p.add_argument("--topk", type=int, help=argparse.SUPPRESS)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=10)

    p = add("analyze", cmd_analyze, "hop-attention ratios by evidence group + t-test")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)

    p = add("divergence", cmd_divergence, "Jensen-Shannon divergence between two datasets")
    p.add_argument("--dataset-a", required=True)
    p.add_argument("--dataset-b", required=True)
    p.add_argument("--field", default="claims", choices=("claims", "sentences", "all"))
    p.add_argument("--out")

    p = add("agreement", cmd_agreement, "inter-annotator agreement (Fleiss kappa, Krippendorff alpha)")
    p.add_argument("--annotations", required=True, help="annotation table JSON")
    p.add_argument("--mode", default="label", choices=("label", "sentence"))
    p.add_argument("--out")

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    _apply_cache_env()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, AdapterError, ConfigError, ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
