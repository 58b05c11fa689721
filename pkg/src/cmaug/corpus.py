"""Dataset model, synthetic corpus generation, and on-disk corpus formats.

A corpus is a list of paired samples: one precomputed video feature vector
plus one short caption, annotated with the verb and noun semantic classes
the caption mentions. The synthetic generator mirrors that structure with
class-conditional Gaussian features: every class owns a fixed unit-norm
prototype vector and a sample's feature is the sum of its class prototypes
plus isotropic noise.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FEATURE_MAGIC = b"CMAUGFT1"
METADATA_FORMAT = "cmaug-corpus"
METADATA_VERSION = 1

METADATA_FILE = "metadata.jsonl"
CLASS_TABLE_FILE = "classes.json"
FEATURE_FILE = "features.bin"

# Deterministic rng substreams, so prototypes can be regenerated without
# replaying the per-sample draws.
_PROTO_STREAM = 0
_SAMPLE_STREAM = 1


class ConfigError(ValueError):
    """A configuration value is out of its documented range."""


class CorpusFormatError(ValueError):
    """An on-disk corpus file is structurally malformed."""


class CorpusValidationError(ValueError):
    """Corpus contents violate a model invariant."""


@dataclass(frozen=True)
class SemanticClassTable:
    """Verb and noun class ids mapped to their interchangeable surface tokens.

    Class ids are dense integers starting at 0 within each table. Surface
    tokens may be multi-word (stored as a single space-separated entry) and
    map to exactly one class within their table.
    """

    verb_classes: dict[int, list[str]]
    noun_classes: dict[int, list[str]]

    def __post_init__(self):
        for name, table in (("verb", self.verb_classes), ("noun", self.noun_classes)):
            if sorted(table) != list(range(len(table))):
                raise CorpusValidationError(
                    f"{name} class ids must be dense integers starting at 0"
                )
            seen: set[str] = set()
            for cid, tokens in table.items():
                if not tokens:
                    raise CorpusValidationError(
                        f"{name} class {cid} has no surface tokens"
                    )
                for tok in tokens:
                    if tok in seen:
                        raise CorpusValidationError(
                            f"{name} token {tok!r} appears in more than one class"
                        )
                    seen.add(tok)

    @property
    def num_verb_classes(self) -> int:
        return len(self.verb_classes)

    @property
    def num_noun_classes(self) -> int:
        return len(self.noun_classes)


@dataclass(frozen=True)
class Annotation:
    """The verb and noun class-id sets attached to one caption/video pair."""

    verb_set: frozenset[int]
    noun_set: frozenset[int]

    def __post_init__(self):
        if not self.verb_set or not self.noun_set:
            raise CorpusValidationError("annotation needs >= 1 verb and >= 1 noun class")


@dataclass(frozen=True, eq=False)
class PairedSample:
    """One video feature vector paired with its caption and annotation.

    ``caption_tokens`` is the whitespace-split word sequence; multi-word
    lexicon entries span several adjacent words.
    """

    id: int
    caption_tokens: tuple[str, ...]
    video_feat: np.ndarray
    annotation: Annotation

    def __post_init__(self):
        if not self.caption_tokens:
            raise CorpusValidationError(f"sample {self.id}: empty caption")
        if self.video_feat.ndim != 1 or not np.all(np.isfinite(self.video_feat)):
            raise CorpusValidationError(f"sample {self.id}: video feature not a finite vector")

    @property
    def caption(self) -> str:
        return " ".join(self.caption_tokens)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairedSample):
            return NotImplemented
        return (
            self.id == other.id
            and self.caption_tokens == other.caption_tokens
            and self.annotation == other.annotation
            and self.video_feat.dtype == other.video_feat.dtype
            and np.array_equal(self.video_feat, other.video_feat)
        )


@dataclass(eq=False)
class Corpus:
    """An immutable collection of paired samples with dense contiguous ids."""

    samples: list[PairedSample]
    class_table: SemanticClassTable
    feature_dim: int
    split: str = "train"

    def __post_init__(self):
        for i, sample in enumerate(self.samples):
            if sample.id != i:
                raise CorpusValidationError(
                    f"sample ids must be contiguous from 0; found {sample.id} at position {i}"
                )
            if sample.video_feat.shape != (self.feature_dim,):
                raise CorpusValidationError(
                    f"sample {i}: feature dim {sample.video_feat.shape} != ({self.feature_dim},)"
                )
            for v in sample.annotation.verb_set:
                if v not in self.class_table.verb_classes:
                    raise CorpusValidationError(f"sample {i}: unknown verb class {v}")
            for n in sample.annotation.noun_set:
                if n not in self.class_table.noun_classes:
                    raise CorpusValidationError(f"sample {i}: unknown noun class {n}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.split == other.split
            and self.feature_dim == other.feature_dim
            and self.class_table == other.class_table
            and self.samples == other.samples
        )

    @property
    def annotations(self) -> list[Annotation]:
        return [s.annotation for s in self.samples]

    def feature_matrix(self) -> np.ndarray:
        """All video features stacked in id order, shape (len, feature_dim)."""
        return np.stack([s.video_feat for s in self.samples])


@dataclass(frozen=True)
class GenConfig:
    """Knobs for the synthetic corpus generator."""

    verb_classes: int = 20
    noun_classes: int = 40
    synonyms_per_class: int = 3
    samples: int = 2000
    feature_dim: int = 64
    noise_scale: float = 0.1

    def __post_init__(self):
        if self.verb_classes < 2:
            raise ConfigError("verb_classes must be >= 2")
        if self.noun_classes < 2:
            raise ConfigError("noun_classes must be >= 2")
        if self.synonyms_per_class < 1:
            raise ConfigError("synonyms_per_class must be >= 1")
        if self.samples < 10:
            raise ConfigError("samples must be >= 10")
        if self.feature_dim < 8:
            raise ConfigError("feature_dim must be >= 8")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be >= 0")


def build_class_table(config: GenConfig) -> SemanticClassTable:
    """Procedural synonym lists; the second noun synonym is multi-word.

    Token vocabularies are disjoint between tables and no qualifier word
    ("small") exists as a standalone entry, so greedy longest-match
    segmentation of generated captions is unambiguous.
    """
    verbs = {
        i: [f"verb{i}"] + [f"verb{i}alt{k}" for k in range(1, config.synonyms_per_class)]
        for i in range(config.verb_classes)
    }
    nouns: dict[int, list[str]] = {}
    for i in range(config.noun_classes):
        forms = [f"noun{i}"]
        if config.synonyms_per_class >= 2:
            forms.append(f"small noun{i}")
        forms.extend(f"noun{i}alt{k}" for k in range(2, config.synonyms_per_class))
        nouns[i] = forms
    return SemanticClassTable(verb_classes=verbs, noun_classes=nouns)


def class_prototypes(config: GenConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed unit-norm prototype vectors per class, regenerable from the seed.

    Returns (verb_prototypes, noun_prototypes) with shapes
    (verb_classes, feature_dim) and (noun_classes, feature_dim).
    """
    rng = np.random.default_rng([seed, _PROTO_STREAM])
    verb = rng.normal(size=(config.verb_classes, config.feature_dim))
    noun = rng.normal(size=(config.noun_classes, config.feature_dim))
    verb /= np.linalg.norm(verb, axis=1, keepdims=True)
    noun /= np.linalg.norm(noun, axis=1, keepdims=True)
    return verb, noun


def generate_synthetic(config: GenConfig, seed: int, split: str = "train") -> Corpus:
    """Generate a corpus deterministically from (config, seed).

    Each sample draws one verb class and one or two distinct noun classes
    uniformly; its caption is the chosen surface tokens in draw order and its
    feature is verb prototype + mean of noun prototypes + noise_scale * N(0, I),
    stored as float32.
    """
    table = build_class_table(config)
    verb_protos, noun_protos = class_prototypes(config, seed)
    rng = np.random.default_rng([seed, _SAMPLE_STREAM])

    samples = []
    for i in range(config.samples):
        verb = int(rng.integers(config.verb_classes))
        n_nouns = 1 + int(rng.integers(2))
        nouns = [int(c) for c in rng.choice(config.noun_classes, size=n_nouns, replace=False)]

        words = list(_pick(table.verb_classes[verb], rng).split(" "))
        for c in nouns:
            words.extend(_pick(table.noun_classes[c], rng).split(" "))

        base = verb_protos[verb] + noun_protos[nouns].mean(axis=0)
        feat = (base + config.noise_scale * rng.normal(size=config.feature_dim)).astype(np.float32)

        samples.append(
            PairedSample(
                id=i,
                caption_tokens=tuple(words),
                video_feat=feat,
                annotation=Annotation(verb_set=frozenset([verb]), noun_set=frozenset(nouns)),
            )
        )
    return Corpus(samples=samples, class_table=table, feature_dim=config.feature_dim, split=split)


def _pick(options: list[str], rng: np.random.Generator) -> str:
    return options[int(rng.integers(len(options)))]


def split_corpus(corpus: Corpus, n_train: int) -> tuple[Corpus, Corpus]:
    """Cut one generated corpus into prototype-consistent train/test corpora.

    The first n_train samples become the train split; the rest are re-numbered
    from 0 and tagged test.
    """
    if not 0 < n_train < len(corpus):
        raise ConfigError(f"n_train must be in (0, {len(corpus)})")
    train = Corpus(
        samples=corpus.samples[:n_train],
        class_table=corpus.class_table,
        feature_dim=corpus.feature_dim,
        split="train",
    )
    renumbered = [
        PairedSample(
            id=j,
            caption_tokens=s.caption_tokens,
            video_feat=s.video_feat,
            annotation=s.annotation,
        )
        for j, s in enumerate(corpus.samples[n_train:])
    ]
    test = Corpus(
        samples=renumbered,
        class_table=corpus.class_table,
        feature_dim=corpus.feature_dim,
        split="test",
    )
    return train, test


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the three corpus files (metadata JSONL, class table, feature blob)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    table = {
        "verbs": {str(cid): toks for cid, toks in sorted(corpus.class_table.verb_classes.items())},
        "nouns": {str(cid): toks for cid, toks in sorted(corpus.class_table.noun_classes.items())},
    }
    (root / CLASS_TABLE_FILE).write_text(json.dumps(table) + "\n")

    header = {
        "format": METADATA_FORMAT,
        "version": METADATA_VERSION,
        "dim": corpus.feature_dim,
        "count": len(corpus),
        "split": corpus.split,
    }
    lines = [json.dumps(header)]
    for s in corpus:
        lines.append(
            json.dumps(
                {
                    "id": s.id,
                    "caption": s.caption,
                    "verbs": sorted(s.annotation.verb_set),
                    "nouns": sorted(s.annotation.noun_set),
                }
            )
        )
    (root / METADATA_FILE).write_text("\n".join(lines) + "\n")

    with open(root / FEATURE_FILE, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", len(corpus), corpus.feature_dim))
        fh.write(corpus.feature_matrix().astype("<f4").tobytes())


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus directory written by save_corpus, validating invariants."""
    root = Path(path)
    features, dim = _read_feature_blob(root / FEATURE_FILE)

    raw_table = json.loads((root / CLASS_TABLE_FILE).read_text())
    try:
        table = SemanticClassTable(
            verb_classes={int(k): list(v) for k, v in raw_table["verbs"].items()},
            noun_classes={int(k): list(v) for k, v in raw_table["nouns"].items()},
        )
    except KeyError as exc:
        raise CorpusFormatError(f"class table missing key {exc}") from exc

    meta_path = root / METADATA_FILE
    with open(meta_path) as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{meta_path}: unparseable header line") from exc
        if header.get("format") != METADATA_FORMAT:
            raise CorpusFormatError(
                f"{meta_path}: expected format {METADATA_FORMAT!r}, found {header.get('format')!r}"
            )
        if header.get("version") != METADATA_VERSION:
            raise CorpusFormatError(f"{meta_path}: unsupported version {header.get('version')!r}")
        count, hdim = header.get("count"), header.get("dim")
        if count != features.shape[0] or hdim != dim:
            raise CorpusFormatError(
                f"{meta_path}: header says count={count} dim={hdim}, "
                f"feature blob has count={features.shape[0]} dim={dim}"
            )
        samples = []
        for i, line in enumerate(fh):
            row = json.loads(line)
            if not row.get("verbs"):
                raise CorpusValidationError(f"{meta_path}: row {i} has empty verb set")
            if not row.get("nouns"):
                raise CorpusValidationError(f"{meta_path}: row {i} has empty noun set")
            samples.append(
                PairedSample(
                    id=row["id"],
                    caption_tokens=tuple(row["caption"].split(" ")),
                    video_feat=features[i],
                    annotation=Annotation(
                        verb_set=frozenset(row["verbs"]),
                        noun_set=frozenset(row["nouns"]),
                    ),
                )
            )
        if len(samples) != count:
            raise CorpusFormatError(
                f"{meta_path}: header says count={count}, found {len(samples)} rows"
            )

    return Corpus(
        samples=samples,
        class_table=table,
        feature_dim=dim,
        split=header.get("split", "train"),
    )


def _read_feature_blob(path: Path) -> tuple[np.ndarray, int]:
    data = path.read_bytes()
    if data[: len(FEATURE_MAGIC)] != FEATURE_MAGIC:
        raise CorpusFormatError(
            f"{path}: bad magic at byte 0 (expected {FEATURE_MAGIC!r}, found {data[:8]!r})"
        )
    header_end = len(FEATURE_MAGIC) + 8
    if len(data) < header_end:
        raise CorpusFormatError(f"{path}: truncated header at byte {len(data)}")
    count, dim = struct.unpack("<II", data[len(FEATURE_MAGIC) : header_end])
    expected = count * dim * 4
    actual = len(data) - header_end
    if actual != expected:
        raise CorpusFormatError(
            f"{path}: expected {expected} feature bytes after the header, found {actual}"
        )
    features = np.frombuffer(data, dtype="<f4", offset=header_end).reshape(count, dim)
    return features.copy(), dim
