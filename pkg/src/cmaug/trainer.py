"""Dual-encoder retrieval model trained with a mined bidirectional margin loss.

The featurizer is frozen: video features pass through from the corpus and a
caption is the mean of fixed random embeddings of its class-bearing tokens.
Each modality then gets one trainable affine projection into a shared space
where L2-normalized embeddings are scored by dot product. Gradients are
computed analytically; the optimizer is plain SGD.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .augment import AugmentConfig, augment_sample
from .corpus import ConfigError, Corpus, CorpusFormatError, PairedSample, SemanticClassTable
from .metrics import full_report, relevance_matrix
from .selection import build_index
from .semantics import Lexicon

CHECKPOINT_MAGIC = b"CMAUGCK1"

# rng substreams hung off the run seed
_TOKEN_TABLE_STREAM = 10
_INIT_STREAM = 11
_SHUFFLE_STREAM = 12
_AUGMENT_STREAM = 13
_MINING_STREAM = 14


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries epoch/batch diagnostics."""


class Mining(str, Enum):
    RANDOM = "random"
    HARDEST = "hardest"
    RELEVANCE_NEGATIVE = "rel-neg"
    RELEVANCE_POSITIVE = "rel-pos"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.05
    margin: float = 0.2
    mining: Mining = Mining.RANDOM
    negative_threshold: float = 0.5
    positive_threshold: float = 1.0
    embed_dim: int = 32
    text_dim: int = 64
    augment: AugmentConfig = field(default_factory=lambda: AugmentConfig(chance=0.0))
    seed: int = 0

    def __post_init__(self):
        if self.margin <= 0:
            raise ConfigError("margin must be > 0")
        if not 0.0 <= self.negative_threshold <= 1.0:
            raise ConfigError("negative_threshold must be in [0, 1]")
        if not 0.0 <= self.positive_threshold <= 1.0:
            raise ConfigError("positive_threshold must be in [0, 1]")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")


class Featurizer:
    """Frozen embeddings: video passthrough, mean-pooled token table for text.

    Every surface form of the class table owns a fixed random vector drawn
    once from the seed; a caption embeds as the mean over its matched
    class-bearing tokens. Never updated by training.
    """

    def __init__(self, class_table: SemanticClassTable, text_dim: int = 64, seed: int = 0):
        self.lexicon = Lexicon(class_table)
        self.text_dim = text_dim
        self.seed = seed
        rng = np.random.default_rng([seed, _TOKEN_TABLE_STREAM])
        self._table = {
            form: rng.normal(size=text_dim) for form in self.lexicon.all_surface_forms()
        }
        self._cache: dict[tuple[str, ...], np.ndarray] = {}

    def video(self, sample: PairedSample) -> np.ndarray:
        return sample.video_feat.astype(np.float64)

    def text(self, sample: PairedSample) -> np.ndarray:
        return self.text_tokens(sample.caption_tokens)

    def text_tokens(self, caption_tokens: tuple[str, ...]) -> np.ndarray:
        key = tuple(caption_tokens)
        hit = self._cache.get(key)
        if hit is None:
            segments = self.lexicon.segments(key)
            if segments:
                hit = np.mean([self._table[s.surface] for s in segments], axis=0)
            else:
                hit = np.zeros(self.text_dim)
            self._cache[key] = hit
        return hit.copy()


class DualEncoder:
    """One affine projection per modality followed by L2 normalization."""

    def __init__(self, video_dim: int, text_dim: int, embed_dim: int, rng: np.random.Generator):
        self.video_weight = rng.normal(0.0, 1.0 / np.sqrt(video_dim), (embed_dim, video_dim))
        self.video_bias = np.zeros(embed_dim)
        self.text_weight = rng.normal(0.0, 1.0 / np.sqrt(text_dim), (embed_dim, text_dim))
        self.text_bias = np.zeros(embed_dim)
        self._check_rows()

    @classmethod
    def from_weights(cls, video_weight, video_bias, text_weight, text_bias) -> "DualEncoder":
        enc = cls.__new__(cls)
        enc.video_weight = np.asarray(video_weight, dtype=np.float64)
        enc.video_bias = np.asarray(video_bias, dtype=np.float64)
        enc.text_weight = np.asarray(text_weight, dtype=np.float64)
        enc.text_bias = np.asarray(text_bias, dtype=np.float64)
        enc._check_rows()
        return enc

    def _check_rows(self):
        for name in ("video_weight", "text_weight"):
            w = getattr(self, name)
            if np.any(np.linalg.norm(w, axis=1) == 0):
                raise ValueError(f"{name} has an all-zero row; outputs could not be normalized")

    @property
    def video_dim(self) -> int:
        return self.video_weight.shape[1]

    @property
    def text_dim(self) -> int:
        return self.text_weight.shape[1]

    @property
    def embed_dim(self) -> int:
        return self.video_weight.shape[0]

    def encode_video(self, feats: np.ndarray) -> np.ndarray:
        return _affine_normalize(feats, self.video_weight, self.video_bias)

    def encode_text(self, feats: np.ndarray) -> np.ndarray:
        return _affine_normalize(feats, self.text_weight, self.text_bias)

    def params(self) -> dict[str, np.ndarray]:
        return {
            "video_weight": self.video_weight,
            "video_bias": self.video_bias,
            "text_weight": self.text_weight,
            "text_bias": self.text_bias,
        }

    def apply_gradients(self, grads: dict[str, np.ndarray], learning_rate: float) -> None:
        for name, grad in grads.items():
            getattr(self, name)[...] -= learning_rate * grad


def _affine_normalize(feats: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    feats = np.asarray(feats, dtype=np.float64)
    single = feats.ndim == 1
    if single:
        feats = feats[None, :]
    if feats.shape[1] != weight.shape[1]:
        raise ValueError(f"input dim {feats.shape[1]} != encoder dim {weight.shape[1]}")
    pre = feats @ weight.T + bias
    norms = np.linalg.norm(pre, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero pre-activation vector")
    out = pre / norms
    return out[0] if single else out


def similarity(e1: np.ndarray, e2: np.ndarray) -> float:
    """Dot product of two unit embeddings, in [-1, 1]."""
    return float(np.dot(e1, e2))


@dataclass
class MiningLog:
    """Which in-batch items each pair used as negatives / extra positives."""

    text_negatives: list[int | None]
    video_negatives: list[int | None]
    extra_positives: list[list[int]]


def contrastive_loss(
    encoder: DualEncoder,
    video_feats: np.ndarray,
    text_feats: np.ndarray,
    mining: Mining = Mining.RANDOM,
    margin: float = 0.2,
    relevance: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    negative_threshold: float = 0.5,
    positive_threshold: float = 1.0,
) -> tuple[float, dict[str, np.ndarray], MiningLog]:
    """Bidirectional max-margin loss over a batch, with analytic gradients.

    For pair i, the mined caption negative j contributes
    max(0, margin - s(v_i, q_i) + s(v_i, q_j)) and the mined video negative
    the mirrored term. Relevance-aware mining restricts negatives to items
    with relevance below negative_threshold; relevance-positive mining also
    sums the hinge over every in-batch item whose relevance reaches
    positive_threshold, treated as an extra positive. Loss is the mean over
    pairs; gradients cover both projections and biases.
    """
    batch = video_feats.shape[0]
    if batch < 2:
        raise ValueError("contrastive loss needs a batch of >= 2 pairs")
    if mining in (Mining.RELEVANCE_NEGATIVE, Mining.RELEVANCE_POSITIVE) and relevance is None:
        raise ValueError(f"{mining.value} mining needs the batch relevance matrix")
    if mining is Mining.RANDOM and rng is None:
        raise ValueError("random mining needs an rng")

    video_feats = np.asarray(video_feats, dtype=np.float64)
    text_feats = np.asarray(text_feats, dtype=np.float64)
    pre_v = video_feats @ encoder.video_weight.T + encoder.video_bias
    pre_t = text_feats @ encoder.text_weight.T + encoder.text_bias
    norm_v = np.linalg.norm(pre_v, axis=1, keepdims=True)
    norm_t = np.linalg.norm(pre_t, axis=1, keepdims=True)
    emb_v = pre_v / norm_v
    emb_t = pre_t / norm_t
    scores = emb_v @ emb_t.T  # scores[i, j] = s(v_i, q_j)

    log = MiningLog(text_negatives=[], video_negatives=[], extra_positives=[])
    loss = 0.0
    grad_scores = np.zeros_like(scores)

    for i in range(batch):
        if mining is Mining.RANDOM:
            text_neg = _random_other(i, batch, rng)
            video_neg = _random_other(i, batch, rng)
        elif mining is Mining.HARDEST:
            text_neg = _hardest(scores[i, :], i)
            video_neg = _hardest(scores[:, i], i)
        else:
            eligible = (relevance[i] < negative_threshold)
            eligible[i] = False
            text_neg = _hardest(scores[i, :], i, eligible)
            video_neg = _hardest(scores[:, i], i, eligible)

        positives = [i]
        if mining is Mining.RELEVANCE_POSITIVE:
            extras = [
                j for j in range(batch) if j != i and relevance[i, j] >= positive_threshold
            ]
            positives.extend(extras)
            log.extra_positives.append(extras)
        else:
            log.extra_positives.append([])
        log.text_negatives.append(text_neg)
        log.video_negatives.append(video_neg)

        if text_neg is not None:
            for p in positives:
                term = margin - scores[i, p] + scores[i, text_neg]
                if term > 0:
                    loss += term
                    grad_scores[i, p] -= 1.0
                    grad_scores[i, text_neg] += 1.0
        if video_neg is not None:
            for p in positives:
                term = margin - scores[p, i] + scores[video_neg, i]
                if term > 0:
                    loss += term
                    grad_scores[p, i] -= 1.0
                    grad_scores[video_neg, i] += 1.0

    loss /= batch
    grad_scores /= batch

    # Backprop: scores -> embeddings -> pre-activations -> affine params.
    grad_emb_v = grad_scores @ emb_t
    grad_emb_t = grad_scores.T @ emb_v
    grad_pre_v = (grad_emb_v - emb_v * np.sum(grad_emb_v * emb_v, axis=1, keepdims=True)) / norm_v
    grad_pre_t = (grad_emb_t - emb_t * np.sum(grad_emb_t * emb_t, axis=1, keepdims=True)) / norm_t
    grads = {
        "video_weight": grad_pre_v.T @ video_feats,
        "video_bias": grad_pre_v.sum(axis=0),
        "text_weight": grad_pre_t.T @ text_feats,
        "text_bias": grad_pre_t.sum(axis=0),
    }
    return float(loss), grads, log


def _random_other(i: int, batch: int, rng: np.random.Generator) -> int:
    j = int(rng.integers(batch - 1))
    return j + 1 if j >= i else j


def _hardest(row: np.ndarray, i: int, eligible: np.ndarray | None = None) -> int | None:
    masked = row.copy()
    masked[i] = -np.inf
    if eligible is not None:
        masked[~eligible] = -np.inf
    if np.all(np.isneginf(masked)):
        return None
    return int(np.argmax(masked))


@dataclass
class TrainResult:
    encoder: DualEncoder
    featurizer: Featurizer
    log: list[dict]


def train(corpus_train: Corpus, config: TrainConfig, val_corpus: Corpus | None = None) -> TrainResult:
    """SGD over shuffled mini-batches; every sample passes the augmentation gate.

    Deterministic given config.seed. Raises TrainingDiverged on a non-finite
    loss. The log holds one dict per epoch: epoch, mean loss, and validation
    nDCG/mAP (t-v averages) when a validation corpus is given.
    """
    featurizer = Featurizer(corpus_train.class_table, config.text_dim, seed=config.seed)
    encoder = DualEncoder(
        corpus_train.feature_dim,
        config.text_dim,
        config.embed_dim,
        np.random.default_rng([config.seed, _INIT_STREAM]),
    )
    shuffle_rng = np.random.default_rng([config.seed, _SHUFFLE_STREAM])
    augment_rng = np.random.default_rng([config.seed, _AUGMENT_STREAM])
    mining_rng = np.random.default_rng([config.seed, _MINING_STREAM])

    index = None
    if config.augment.baseline is None:
        index = build_index(corpus_train, config.augment.criterion)
    needs_relevance = config.mining in (Mining.RELEVANCE_NEGATIVE, Mining.RELEVANCE_POSITIVE)

    n = len(corpus_train)
    log: list[dict] = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        seen = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            if len(idx) < 2:
                continue  # a trailing single-pair batch cannot form a triplet
            pairs = [
                augment_sample(
                    corpus_train.samples[i], corpus_train, index, featurizer,
                    config.augment, augment_rng,
                )
                for i in idx
            ]
            video_feats = np.stack([p.video_feat for p in pairs])
            text_feats = np.stack([p.text_feat for p in pairs])
            relevance = None
            if needs_relevance:
                annos = [corpus_train.samples[i].annotation for i in idx]
                relevance = relevance_matrix(annos, annos)
            loss, grads, _ = contrastive_loss(
                encoder,
                video_feats,
                text_feats,
                mining=config.mining,
                margin=config.margin,
                relevance=relevance,
                rng=mining_rng,
                negative_threshold=config.negative_threshold,
                positive_threshold=config.positive_threshold,
            )
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {loss} at epoch {epoch}, batch {start // config.batch_size} "
                    f"(lr={config.learning_rate}, margin={config.margin})"
                )
            encoder.apply_gradients(grads, config.learning_rate)
            epoch_loss += loss * len(idx)
            seen += len(idx)

        entry = {"epoch": epoch, "loss": epoch_loss / seen}
        if val_corpus is not None:
            report = full_report(text_video_scores(encoder, featurizer, val_corpus), val_corpus.annotations)
            entry["val_nDCG"] = report["t-v"]["nDCG"]
            entry["val_mAP"] = report["t-v"]["mAP"]
        log.append(entry)
    return TrainResult(encoder=encoder, featurizer=featurizer, log=log)


def score_matrix(
    encoder: DualEncoder,
    query_feats: np.ndarray,
    gallery_feats: np.ndarray,
    query_modality: str = "text",
    gallery_modality: str = "video",
) -> np.ndarray:
    """similarity(encode(query_i), encode(gallery_j)) for all pairs."""
    encoders = {"text": encoder.encode_text, "video": encoder.encode_video}
    queries = encoders[query_modality](np.atleast_2d(np.asarray(query_feats, dtype=np.float64)))
    gallery = encoders[gallery_modality](np.atleast_2d(np.asarray(gallery_feats, dtype=np.float64)))
    return queries @ gallery.T


def text_video_scores(encoder: DualEncoder, featurizer: Featurizer, corpus: Corpus) -> np.ndarray:
    """The full caption-by-video score matrix for one corpus."""
    text_feats = np.stack([featurizer.text(s) for s in corpus])
    video_feats = np.stack([featurizer.video(s) for s in corpus])
    return score_matrix(encoder, text_feats, video_feats, "text", "video")


def save_checkpoint(path: str | Path, encoder: DualEncoder, seed: int, config_echo: dict | None = None) -> None:
    """Magic + u32 header length + JSON header + float32 LE weight blob."""
    header = {
        "format": "cmaug-checkpoint",
        "version": 1,
        "video_dim": encoder.video_dim,
        "text_dim": encoder.text_dim,
        "embed_dim": encoder.embed_dim,
        "seed": seed,
        "config": config_echo or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(
        np.ascontiguousarray(arr, dtype="<f4").tobytes()
        for arr in (encoder.video_weight, encoder.video_bias, encoder.text_weight, encoder.text_bias)
    )
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[DualEncoder, dict]:
    data = Path(path).read_bytes()
    if data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CorpusFormatError(f"{path}: bad checkpoint magic at byte 0")
    (header_len,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12 : 12 + header_len])
    dv, dt, e = header["video_dim"], header["text_dim"], header["embed_dim"]
    expected = (e * dv + e + e * dt + e) * 4
    blob = data[12 + header_len :]
    if len(blob) != expected:
        raise CorpusFormatError(
            f"{path}: expected {expected} weight bytes, found {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    offsets = np.cumsum([0, e * dv, e, e * dt, e])
    encoder = DualEncoder.from_weights(
        flat[offsets[0] : offsets[1]].reshape(e, dv),
        flat[offsets[1] : offsets[2]],
        flat[offsets[2] : offsets[3]].reshape(e, dt),
        flat[offsets[3] : offsets[4]],
    )
    return encoder, header
