"""Stochastic feature-space mixing of paired samples, plus two baselines.

At training time each sample is augmented with probability ``chance``. When
the gate fires, a fair coin picks the verb or the noun branch for both
modalities; each modality then independently samples one of the sample's own
classes of that kind, draws a partner from the candidate index, and replaces
its feature with a convex combination of the two, using an independent mix
weight per modality. Empty candidate sets make that half pass through
unchanged.

The two comparison baselines live here as well: additive Gaussian noise on
the video features, and in-class synonym replacement on the raw caption.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .corpus import ConfigError, Corpus, PairedSample
from .selection import CandidateIndex, SelectionMode
from .semantics import Segment


@dataclass(frozen=True)
class BetaWeight:
    """Mix weight drawn from a Beta distribution; Beta(1, 1) is uniform."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("Beta parameters must be positive")


@dataclass(frozen=True)
class FixedWeight:
    """Deterministic mix weight."""

    value: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ConfigError("fixed mix weight must be in [0, 1]")


MixWeight = BetaWeight | FixedWeight


@dataclass(frozen=True)
class NoiseInjection:
    """Baseline: perturb video features with element-wise Gaussian noise."""

    sigma: float = 0.1

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("noise sigma must be >= 0")


@dataclass(frozen=True)
class SynonymReplacement:
    """Baseline: swap one caption token for another surface form of its class."""


class AugmentTarget(str, Enum):
    VIDEO_ONLY = "video"
    TEXT_ONLY = "text"
    JOINT = "joint"


@dataclass(frozen=True)
class AugmentConfig:
    chance: float = 1.0
    mix_weight: MixWeight = BetaWeight(1.0, 1.0)
    criterion: SelectionMode = SelectionMode.FINE
    target: AugmentTarget = AugmentTarget.JOINT
    baseline: NoiseInjection | SynonymReplacement | None = None

    def __post_init__(self):
        if not 0.0 <= self.chance <= 1.0:
            raise ConfigError("chance must be in [0, 1]")


@dataclass(frozen=True)
class MixRecord:
    """Audit trail of one augmentation decision."""

    kind: str  # "mix", "noise", or "synonym"
    branch: str | None = None  # "verb" or "noun" for kind == "mix"
    video_class: int | None = None
    video_partner: int | None = None
    video_weight: float | None = None
    text_class: int | None = None
    text_partner: int | None = None
    text_weight: float | None = None
    detail: str | None = None


@dataclass
class AugmentedPair:
    """The (possibly mixed) feature pair fed to the encoders."""

    video_feat: np.ndarray
    text_feat: np.ndarray
    was_augmented: bool
    mix_record: MixRecord | None = None


def convex_mix(first: np.ndarray, second: np.ndarray, weight: float) -> np.ndarray:
    """weight * first + (1 - weight) * second, element-wise."""
    if first.shape != second.shape:
        raise ValueError(f"cannot mix shapes {first.shape} and {second.shape}")
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"mix weight {weight} outside [0, 1]")
    return weight * first + (1.0 - weight) * second


def mix_video_features(original: np.ndarray, partner: np.ndarray, weight: float) -> np.ndarray:
    """Convex combination of two video feature vectors."""
    return convex_mix(original, partner, weight)


def mix_caption_features(original: np.ndarray, partner: np.ndarray, weight: float) -> np.ndarray:
    """Convex combination of two caption feature vectors."""
    return convex_mix(original, partner, weight)


def sample_mix_weight(mode: MixWeight, rng: np.random.Generator) -> float:
    if isinstance(mode, FixedWeight):
        return mode.value
    return float(rng.beta(mode.alpha, mode.beta))


def noise_injection(feat: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """feat + N(0, sigma^2) per element; identity when sigma == 0."""
    return feat + sigma * rng.normal(size=feat.shape)


def synonym_replacement(caption_tokens, lexicon, rng: np.random.Generator) -> tuple[str, ...]:
    """Replace one class-bearing token with a different surface form of its class.

    Replaceable positions are matched segments whose class has at least two
    surface forms; if there are none the caption is returned unchanged. Class
    annotations are preserved by construction.
    """
    segments = lexicon.segments(caption_tokens)
    replaceable: list[tuple[Segment, list[str]]] = []
    for seg in segments:
        forms = lexicon.surface_forms(seg.kind, seg.class_id)
        if len(forms) >= 2:
            replaceable.append((seg, forms))
    if not replaceable:
        return tuple(caption_tokens)

    seg, forms = replaceable[int(rng.integers(len(replaceable)))]
    alternates = [f for f in forms if f != seg.surface]
    replacement = alternates[int(rng.integers(len(alternates)))]

    words = list(caption_tokens)
    words[seg.start : seg.start + len(seg.words)] = replacement.split(" ")
    return tuple(words)


def _gate_fires(chance: float, rng: np.random.Generator) -> bool:
    # One uniform draw per call regardless of chance keeps rng streams
    # aligned across configurations.
    return rng.uniform(0.0, 100.0) > (1.0 - chance) * 100.0


def augment_pair(
    sample: PairedSample,
    corpus: Corpus,
    index: CandidateIndex,
    featurizer,
    config: AugmentConfig,
    rng: np.random.Generator,
) -> AugmentedPair:
    """Mixing augmentation for one sample; pure given the rng state.

    The featurizer supplies the frozen embeddings: ``video(sample)`` and
    ``text(sample)``.
    """
    video_feat = featurizer.video(sample)
    text_feat = featurizer.text(sample)
    if not _gate_fires(config.chance, rng):
        return AugmentedPair(video_feat, text_feat, was_augmented=False)

    branch = "noun" if int(rng.integers(2)) == 0 else "verb"
    anno = sample.annotation
    own = sorted(anno.noun_set if branch == "noun" else anno.verb_set)
    record = MixRecord(kind="mix", branch=branch)

    if config.target in (AugmentTarget.JOINT, AugmentTarget.VIDEO_ONLY):
        cls = own[int(rng.integers(len(own)))]
        if branch == "noun":
            partners = index.video_partners_by_noun(cls, sample.id)
        else:
            partners = index.video_partners_by_verb(cls, sample.id)
        record = replace(record, video_class=cls)
        if partners:
            partner_id = partners[int(rng.integers(len(partners)))]
            weight = sample_mix_weight(config.mix_weight, rng)
            partner_feat = featurizer.video(corpus.samples[partner_id])
            video_feat = mix_video_features(video_feat, partner_feat, weight)
            record = replace(record, video_partner=partner_id, video_weight=weight)

    if config.target in (AugmentTarget.JOINT, AugmentTarget.TEXT_ONLY):
        cls = own[int(rng.integers(len(own)))]
        if branch == "noun":
            partners = index.caption_partners_by_noun(cls, sample.id)
        else:
            partners = index.caption_partners_by_verb(cls, sample.id)
        record = replace(record, text_class=cls)
        if partners:
            partner_id = partners[int(rng.integers(len(partners)))]
            weight = sample_mix_weight(config.mix_weight, rng)
            partner_feat = featurizer.text(corpus.samples[partner_id])
            text_feat = mix_caption_features(text_feat, partner_feat, weight)
            record = replace(record, text_partner=partner_id, text_weight=weight)

    return AugmentedPair(video_feat, text_feat, was_augmented=True, mix_record=record)


def augment_sample(
    sample: PairedSample,
    corpus: Corpus,
    index: CandidateIndex | None,
    featurizer,
    config: AugmentConfig,
    rng: np.random.Generator,
) -> AugmentedPair:
    """Dispatch between the mixing augmentation and the two baselines."""
    if config.baseline is None:
        if index is None:
            raise ConfigError("mixing augmentation needs a candidate index")
        return augment_pair(sample, corpus, index, featurizer, config, rng)

    video_feat = featurizer.video(sample)
    text_feat = featurizer.text(sample)
    if not _gate_fires(config.chance, rng):
        return AugmentedPair(video_feat, text_feat, was_augmented=False)

    if isinstance(config.baseline, NoiseInjection):
        video_feat = noise_injection(video_feat, config.baseline.sigma, rng)
        record = MixRecord(kind="noise", detail=f"sigma={config.baseline.sigma}")
    else:
        new_tokens = synonym_replacement(sample.caption_tokens, featurizer.lexicon, rng)
        text_feat = featurizer.text_tokens(new_tokens)
        record = MixRecord(kind="synonym", detail=" ".join(new_tokens))
    return AugmentedPair(video_feat, text_feat, was_augmented=True, mix_record=record)
