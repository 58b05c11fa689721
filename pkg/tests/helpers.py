"""Shared builders for hand-crafted corpora used across the test modules."""

import numpy as np

from cmaug import Annotation, Corpus, PairedSample, SemanticClassTable

# Small vocabulary mirroring the kind of data the generator produces: verb
# class 0 = take-like, 1 = wash-like; noun class 0 = fork, 1 = pizza-like
# (with a multi-word member), 2 = spoon.
TOY_TABLE = SemanticClassTable(
    verb_classes={0: ["take", "pick", "grab"], 1: ["wash", "rinse"]},
    noun_classes={0: ["fork"], 1: ["pizza", "slice of pizza"], 2: ["spoon"]},
)

TAKE, WASH = 0, 1
FORK, PIZZA, SPOON = 0, 1, 2


def make_corpus(rows, table=TOY_TABLE, feature_dim=8, split="train", features=None):
    """Build a corpus from (caption, verb_ids, noun_ids) rows.

    Features default to distinct one-hot-scaled vectors so mixing geometry is
    easy to reason about; pass `features` to override.
    """
    samples = []
    for i, (caption, verbs, nouns) in enumerate(rows):
        if features is not None:
            feat = np.asarray(features[i], dtype=np.float32)
        else:
            feat = np.zeros(feature_dim, dtype=np.float32)
            feat[i % feature_dim] = float(i + 1)
        samples.append(
            PairedSample(
                id=i,
                caption_tokens=tuple(caption.split(" ")),
                video_feat=feat,
                annotation=Annotation(verb_set=frozenset(verbs), noun_set=frozenset(nouns)),
            )
        )
    return Corpus(samples=samples, class_table=table, feature_dim=feature_dim, split=split)


def take_fork_corpus():
    """s0: take/fork, s1: take/pizza, s2: take/fork."""
    return make_corpus(
        [
            ("take fork", {TAKE}, {FORK}),
            ("take pizza", {TAKE}, {PIZZA}),
            ("grab fork", {TAKE}, {FORK}),
        ]
    )


def wash_fork_corpus():
    """s0: take/fork, s1: wash/fork, s2: take/fork."""
    return make_corpus(
        [
            ("take fork", {TAKE}, {FORK}),
            ("wash fork", {WASH}, {FORK}),
            ("grab fork", {TAKE}, {FORK}),
        ]
    )


def random_annotations(rng, count, n_verbs=6, n_nouns=8):
    """Random nonempty verb/noun class sets."""
    out = []
    for _ in range(count):
        verbs = rng.choice(n_verbs, size=rng.integers(1, 3), replace=False)
        nouns = rng.choice(n_nouns, size=rng.integers(1, 4), replace=False)
        out.append(Annotation(verb_set=frozenset(int(v) for v in verbs),
                              noun_set=frozenset(int(n) for n in nouns)))
    return out
