"""Experiment harness: corpus generation, training, evaluation, chi sweeps.

Verbs: gen, train, eval, sweep, augment-dump, print-config. Every command is
deterministic given its spec and seeds. Exit codes: 0 success, 2 config
error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .augment import (
    AugmentConfig,
    AugmentTarget,
    BetaWeight,
    FixedWeight,
    NoiseInjection,
    SynonymReplacement,
    augment_sample,
)
from .corpus import (
    ConfigError,
    Corpus,
    CorpusFormatError,
    CorpusValidationError,
    GenConfig,
    generate_synthetic,
    load_corpus,
    save_corpus,
    split_corpus,
)
from .metrics import full_report
from .selection import SelectionMode, build_index
from .trainer import (
    Featurizer,
    Mining,
    TrainConfig,
    TrainingDiverged,
    load_checkpoint,
    save_checkpoint,
    text_video_scores,
    train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_AUGMENT_STREAM = 13  # matches the trainer's augmentation substream

DEFAULT_SPEC: dict = {
    "corpus": {
        "generate": {
            "verb_classes": 20,
            "noun_classes": 40,
            "synonyms_per_class": 3,
            "train_samples": 2000,
            "test_samples": 500,
            "feature_dim": 64,
            "noise_scale": 0.1,
            "seed": 1,
        },
        "train_dir": None,
        "test_dir": None,
    },
    "train": {
        "epochs": 50,
        "batch_size": 64,
        "learning_rate": 0.05,
        "margin": 0.2,
        "mining": "random",
        "negative_threshold": 0.5,
        "positive_threshold": 1.0,
        "embed_dim": 32,
        "text_dim": 64,
    },
    "augment": {
        "chance": 1.0,
        "mix_weight": {"kind": "beta", "alpha": 1.0, "beta": 1.0},
        "criterion": "fine",
        "target": "joint",
        "baseline": None,
        "noise_sigma": 0.1,
    },
    "sweep": {
        "chi": [0.0, 0.25, 0.5, 0.75, 1.0],
        "variants": ["none", "joint"],
    },
    "seeds": [0],
    "out_dir": "runs",
    "map_threshold": 1.0,
    "workers": 1,
}

VARIANT_NAMES = (
    "none",
    "video-fine",
    "video-coarse",
    "video-fixed-lambda",
    "video-noise",
    "text-feature",
    "text-synonym",
    "joint",
)

SWEEP_COLUMNS = (
    "chi",
    "seed",
    "variant",
    "ndcg_t2v",
    "ndcg_v2t",
    "ndcg_avg",
    "map_t2v",
    "map_v2t",
    "map_avg",
    "rsum",
)


def load_spec(path: str | None) -> dict:
    """Merge a JSON spec file over the defaults, rejecting unknown fields."""
    spec = copy.deepcopy(DEFAULT_SPEC)
    if path is None:
        return spec
    user = json.loads(Path(path).read_text())
    _merge_checked(spec, user, section="")
    _validate_spec(spec)
    return spec


def _merge_checked(base: dict, user: dict, section: str) -> None:
    for key, value in user.items():
        where = f"{section}.{key}" if section else key
        if key not in base:
            raise ConfigError(f"unknown spec field {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict) and key != "mix_weight":
            _merge_checked(base[key], value, where)
        else:
            base[key] = value


def _validate_spec(spec: dict) -> None:
    if not spec["seeds"]:
        raise ConfigError("seeds: need at least one seed")
    for chi in spec["sweep"]["chi"]:
        if not 0.0 <= chi <= 1.0:
            raise ConfigError(f"sweep.chi: value {chi} outside [0, 1]")
    for token in spec["sweep"]["variants"]:
        parse_variant(token)  # raises ConfigError on a bad token
    if spec["train"]["mining"] not in [m.value for m in Mining]:
        raise ConfigError(f"train.mining: unknown strategy {spec['train']['mining']!r}")


def build_gen_config(spec: dict) -> tuple[GenConfig, int, int]:
    g = spec["corpus"]["generate"]
    total = g["train_samples"] + g["test_samples"]
    config = GenConfig(
        verb_classes=g["verb_classes"],
        noun_classes=g["noun_classes"],
        synonyms_per_class=g["synonyms_per_class"],
        samples=total,
        feature_dim=g["feature_dim"],
        noise_scale=g["noise_scale"],
    )
    return config, g["train_samples"], g["seed"]


def resolve_corpora(spec: dict) -> tuple[Corpus, Corpus | None]:
    """Load the train/test corpora from disk or generate a consistent split."""
    c = spec["corpus"]
    if c["train_dir"]:
        train_corpus = load_corpus(c["train_dir"])
        test_corpus = load_corpus(c["test_dir"]) if c["test_dir"] else None
        return train_corpus, test_corpus
    config, n_train, seed = build_gen_config(spec)
    corpus = generate_synthetic(config, seed=seed)
    if n_train == len(corpus):
        return corpus, None
    return split_corpus(corpus, n_train)


def build_mix_weight(raw: dict) -> BetaWeight | FixedWeight:
    kind = raw.get("kind")
    if kind == "beta":
        return BetaWeight(alpha=raw.get("alpha", 1.0), beta=raw.get("beta", 1.0))
    if kind == "fixed":
        return FixedWeight(value=raw.get("value", 0.5))
    raise ConfigError(f"augment.mix_weight.kind must be 'beta' or 'fixed', got {kind!r}")


def build_augment_config(spec: dict, chance: float | None = None) -> AugmentConfig:
    a = spec["augment"]
    baseline = None
    if a["baseline"] == "noise":
        baseline = NoiseInjection(sigma=a["noise_sigma"])
    elif a["baseline"] == "synonym":
        baseline = SynonymReplacement()
    elif a["baseline"] is not None:
        raise ConfigError(f"augment.baseline must be null, 'noise' or 'synonym', got {a['baseline']!r}")
    return AugmentConfig(
        chance=a["chance"] if chance is None else chance,
        mix_weight=build_mix_weight(a["mix_weight"]),
        criterion=SelectionMode(a["criterion"]),
        target=AugmentTarget(a["target"]),
        baseline=baseline,
    )


def build_train_config(spec: dict, seed: int, augment: AugmentConfig) -> TrainConfig:
    t = spec["train"]
    return TrainConfig(
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        learning_rate=t["learning_rate"],
        margin=t["margin"],
        mining=Mining(t["mining"]),
        negative_threshold=t["negative_threshold"],
        positive_threshold=t["positive_threshold"],
        embed_dim=t["embed_dim"],
        text_dim=t["text_dim"],
        augment=augment,
        seed=seed,
    )


def parse_variant(token: str) -> tuple[str, str | None]:
    """Split '<aug>[+<mining>]' and validate both halves."""
    name, _, mining = token.partition("+")
    if name not in VARIANT_NAMES:
        raise ConfigError(f"unknown sweep variant {name!r} (choose from {', '.join(VARIANT_NAMES)})")
    if mining and mining not in [m.value for m in Mining]:
        raise ConfigError(f"unknown mining suffix {mining!r} in variant {token!r}")
    return name, mining or None


def variant_augment_config(name: str, chi: float, noise_sigma: float) -> AugmentConfig:
    """The augmentation grid behind the sweep CSV."""
    uniform = BetaWeight(1.0, 1.0)
    if name == "none":
        return AugmentConfig(chance=0.0)
    if name == "video-fine":
        return AugmentConfig(chance=chi, mix_weight=uniform, criterion=SelectionMode.FINE,
                             target=AugmentTarget.VIDEO_ONLY)
    if name == "video-coarse":
        return AugmentConfig(chance=chi, mix_weight=uniform, criterion=SelectionMode.COARSE,
                             target=AugmentTarget.VIDEO_ONLY)
    if name == "video-fixed-lambda":
        return AugmentConfig(chance=chi, mix_weight=FixedWeight(0.5), criterion=SelectionMode.FINE,
                             target=AugmentTarget.VIDEO_ONLY)
    if name == "video-noise":
        return AugmentConfig(chance=chi, baseline=NoiseInjection(sigma=noise_sigma))
    if name == "text-feature":
        return AugmentConfig(chance=chi, mix_weight=uniform, criterion=SelectionMode.FINE,
                             target=AugmentTarget.TEXT_ONLY)
    if name == "text-synonym":
        return AugmentConfig(chance=chi, baseline=SynonymReplacement())
    if name == "joint":
        return AugmentConfig(chance=chi, mix_weight=uniform, criterion=SelectionMode.FINE,
                             target=AugmentTarget.JOINT)
    raise ConfigError(f"unknown sweep variant {name!r}")


def cmd_gen(spec: dict, out_dir: Path, seed: int | None = None) -> None:
    config, n_train, spec_seed = build_gen_config(spec)
    use_seed = spec_seed if seed is None else seed
    corpus = generate_synthetic(config, seed=use_seed)
    if n_train < len(corpus):
        train_corpus, test_corpus = split_corpus(corpus, n_train)
        save_corpus(train_corpus, out_dir / "train")
        save_corpus(test_corpus, out_dir / "test")
        print(f"wrote {len(train_corpus)} train + {len(test_corpus)} test samples to {out_dir}")
    else:
        save_corpus(corpus, out_dir / "train")
        print(f"wrote {len(corpus)} train samples to {out_dir}")


def config_echo(train_config: TrainConfig) -> dict:
    echo = asdict(train_config)
    echo["mining"] = train_config.mining.value
    aug = echo["augment"]
    aug["criterion"] = train_config.augment.criterion.value
    aug["target"] = train_config.augment.target.value
    baseline = train_config.augment.baseline
    if isinstance(baseline, NoiseInjection):
        aug["baseline"] = {"kind": "noise", "sigma": baseline.sigma}
    elif isinstance(baseline, SynonymReplacement):
        aug["baseline"] = {"kind": "synonym"}
    return echo


def cmd_train(spec: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    train_corpus, _ = resolve_corpora(spec)
    augment = build_augment_config(spec)
    rows = []
    for seed in spec["seeds"]:
        config = build_train_config(spec, seed, augment)
        result = train(train_corpus, config)
        path = out_dir / f"checkpoint-seed{seed}.ckpt"
        save_checkpoint(path, result.encoder, seed, config_echo(config))
        rows.extend((seed, entry["epoch"], entry["loss"]) for entry in result.log)
        print(f"seed {seed}: final loss {result.log[-1]['loss']:.6f} -> {path}")
    with open(out_dir / "train-log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "epoch", "loss"])
        for seed, epoch, loss in rows:
            writer.writerow([seed, epoch, repr(loss)])


def cmd_eval(checkpoint: Path, corpus_dir: Path, out_dir: Path | None, map_threshold: float) -> dict:
    encoder, header = load_checkpoint(checkpoint)
    corpus = load_corpus(corpus_dir)
    featurizer = Featurizer(corpus.class_table, text_dim=header["text_dim"], seed=header["seed"])
    report = full_report(text_video_scores(encoder, featurizer, corpus), corpus.annotations, map_threshold)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for direction in ("t2v", "v2t", "t-v"):
        block = report[direction]
        print(
            f"{direction:>4}  nDCG {100 * block['nDCG']:.1f}  mAP {100 * block['mAP']:.1f}  "
            f"R@1 {100 * block['R@1']:.1f}  R@5 {100 * block['R@5']:.1f}  R@10 {100 * block['R@10']:.1f}"
        )
    print(f"Rsum {report['Rsum']:.1f}")
    return report


def _run_sweep_cell(args: tuple) -> dict:
    train_corpus, test_corpus, spec, chi, token, seed = args
    name, mining_override = parse_variant(token)
    augment = variant_augment_config(name, chi, spec["augment"]["noise_sigma"])
    config = build_train_config(spec, seed, augment)
    if mining_override:
        config = replace(config, mining=Mining(mining_override))
    result = train(train_corpus, config)
    report = full_report(
        text_video_scores(result.encoder, result.featurizer, test_corpus),
        test_corpus.annotations,
        spec["map_threshold"],
    )
    return {
        "chi": chi,
        "seed": seed,
        "variant": token,
        "ndcg_t2v": report["t2v"]["nDCG"],
        "ndcg_v2t": report["v2t"]["nDCG"],
        "ndcg_avg": report["t-v"]["nDCG"],
        "map_t2v": report["t2v"]["mAP"],
        "map_v2t": report["v2t"]["mAP"],
        "map_avg": report["t-v"]["mAP"],
        "rsum": report["Rsum"],
    }


def cmd_sweep(spec: dict, out_dir: Path, workers: int) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    train_corpus, test_corpus = resolve_corpora(spec)
    if test_corpus is None:
        raise ConfigError("sweep needs a test corpus (corpus.test_dir or generate.test_samples > 0)")
    cells = [
        (train_corpus, test_corpus, spec, chi, token, seed)
        for chi in spec["sweep"]["chi"]
        for token in spec["sweep"]["variants"]
        for seed in spec["seeds"]
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sweep_cell, cells))
    else:
        results = [_run_sweep_cell(cell) for cell in cells]

    results.sort(key=lambda r: (r["chi"], r["variant"], r["seed"]))
    path = out_dir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in results:
            writer.writerow(
                [repr(row[c]) if isinstance(row[c], float) else row[c] for c in SWEEP_COLUMNS]
            )
    print(f"wrote {len(results)} sweep rows to {path}")
    return path


def cmd_augment_dump(spec: dict, out_path: Path, count: int) -> None:
    train_corpus, _ = resolve_corpora(spec)
    augment = build_augment_config(spec)
    seed = spec["seeds"][0]
    featurizer = Featurizer(train_corpus.class_table, text_dim=spec["train"]["text_dim"], seed=seed)
    index = build_index(train_corpus, augment.criterion) if augment.baseline is None else None
    rng = np.random.default_rng([seed, _AUGMENT_STREAM])
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        for i in range(count):
            sample = train_corpus.samples[i % len(train_corpus)]
            pair = augment_sample(sample, train_corpus, index, featurizer, augment, rng)
            record = {"sample": sample.id, "augmented": pair.was_augmented}
            if pair.mix_record is not None:
                record.update(asdict(pair.mix_record))
            fh.write(json.dumps(record) + "\n")
    print(f"wrote {count} augmentation records to {out_path}")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise ConfigError(f"bad float list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmaug", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment spec (defaults used when omitted)")
        p.add_argument("--seed", type=int, action="append", help="override spec seeds (repeatable)")
        p.add_argument("--out", help="output directory")

    p_gen = sub.add_parser("gen", help="generate and write a synthetic corpus")
    common(p_gen)

    p_train = sub.add_parser("train", help="train one checkpoint per seed")
    common(p_train)
    p_train.add_argument("--resume", help="not supported; fails with an explanation")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--corpus", required=True, help="corpus directory")
    p_eval.add_argument("--out", help="directory for report.json")
    p_eval.add_argument("--map-threshold", type=float, default=1.0)

    p_sweep = sub.add_parser("sweep", help="train/eval a chi x variant x seed grid")
    common(p_sweep)
    p_sweep.add_argument("--chi", help="comma-separated chi values, overrides the spec")
    p_sweep.add_argument("--variant", help="comma-separated variant tokens, overrides the spec")
    p_sweep.add_argument("--workers", type=int, default=None)

    p_dump = sub.add_parser("augment-dump", help="JSONL audit stream of augmentation records")
    common(p_dump)
    p_dump.add_argument("--count", type=int, default=1000)

    sub.add_parser("print-config", help="print the fully defaulted experiment spec")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "print-config":
        print(json.dumps(DEFAULT_SPEC, indent=2))
        return EXIT_OK

    if args.command == "eval":
        cmd_eval(
            Path(args.checkpoint),
            Path(args.corpus),
            Path(args.out) if args.out else None,
            args.map_threshold,
        )
        return EXIT_OK

    spec = load_spec(args.config)
    if args.seed:
        spec["seeds"] = args.seed
    out_dir = Path(args.out) if args.out else Path(spec["out_dir"])

    if args.command == "gen":
        cmd_gen(spec, out_dir, seed=args.seed[0] if args.seed else None)
    elif args.command == "train":
        if args.resume:
            raise ConfigError("resuming from a checkpoint is not supported; start a fresh run")
        cmd_train(spec, out_dir)
    elif args.command == "sweep":
        if args.chi is not None:
            spec["sweep"]["chi"] = _parse_float_list(args.chi)
        if args.variant is not None:
            spec["sweep"]["variants"] = [v for v in args.variant.split(",") if v]
        _validate_spec(spec)
        workers = args.workers if args.workers is not None else spec["workers"]
        cmd_sweep(spec, out_dir, workers)
    elif args.command == "augment-dump":
        cmd_augment_dump(spec, out_dir / "augment-dump.jsonl", args.count)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusFormatError, CorpusValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingDiverged, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
