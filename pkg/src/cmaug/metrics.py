"""Semantic relevance and rank-aware retrieval metrics.

Relevance between two annotated samples is the mean of the Jaccard indices
of their verb-class sets and noun-class sets, in [0, 1]. mAP binarizes it
(relevant iff relevance >= threshold, 1.0 by default), nDCG uses it directly
as a graded gain, and recall@K only credits the paired ground-truth item.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Annotation

TIE_POLICY = "score-desc,id-asc"


def semantic_relevance(x: Annotation, y: Annotation) -> float:
    """Mean of the verb-set and noun-set Jaccard indices; symmetric."""
    if not (x.verb_set | y.verb_set) or not (x.noun_set | y.noun_set):
        raise ValueError("relevance undefined for empty class sets")
    verb = len(x.verb_set & y.verb_set) / len(x.verb_set | y.verb_set)
    noun = len(x.noun_set & y.noun_set) / len(x.noun_set | y.noun_set)
    return 0.5 * (verb + noun)


def relevance_matrix(queries: Sequence[Annotation], gallery: Sequence[Annotation]) -> np.ndarray:
    """Pairwise semantic relevance, shape (len(queries), len(gallery)).

    Vectorized with class-membership indicator matrices; exact, no
    approximation relative to semantic_relevance.
    """
    def indicator(annos: Sequence[Annotation], getter) -> np.ndarray:
        n_classes = 1 + max(max(getter(a)) for a in annos)
        mat = np.zeros((len(annos), n_classes), dtype=np.float64)
        for i, a in enumerate(annos):
            mat[i, list(getter(a))] = 1.0
        return mat

    out = np.zeros((len(queries), len(gallery)))
    for getter in (lambda a: a.verb_set, lambda a: a.noun_set):
        q = indicator(queries, getter)
        g = indicator(gallery, getter)
        width = max(q.shape[1], g.shape[1])
        q = np.pad(q, ((0, 0), (0, width - q.shape[1])))
        g = np.pad(g, ((0, 0), (0, width - g.shape[1])))
        inter = q @ g.T
        union = q.sum(1)[:, None] + g.sum(1)[None, :] - inter
        out += 0.5 * inter / union
    return out


@dataclass(frozen=True)
class RankedResult:
    """Gallery ids for one query, ordered best-first under the tie policy."""

    query_id: int
    gallery_ids: tuple[int, ...]
    tie_policy: str = TIE_POLICY


def rank_gallery(query_id: int, scores: np.ndarray) -> RankedResult:
    """Order gallery ids by descending score, ties broken by ascending id."""
    ids = np.arange(len(scores))
    order = np.lexsort((ids, -np.asarray(scores, dtype=np.float64)))
    return RankedResult(query_id=query_id, gallery_ids=tuple(int(i) for i in order))


def average_precision(ranked: RankedResult, rel_labels: np.ndarray) -> float:
    """AP over the full list; 0.0 when nothing is relevant."""
    labels = np.asarray(rel_labels, dtype=bool)
    n_relevant = int(labels.sum())
    if n_relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for k, gid in enumerate(ranked.gallery_ids, start=1):
        if labels[gid]:
            hits += 1
            total += hits / k
    return total / n_relevant


def ndcg(ranked: RankedResult, gains: np.ndarray) -> float:
    """Full-list nDCG with log2(k+1) discount; 0.0 when all gains are zero."""
    gains = np.asarray(gains, dtype=np.float64)
    discounts = 1.0 / np.log2(np.arange(2, len(gains) + 2))
    dcg = float(gains[list(ranked.gallery_ids)] @ discounts)
    ideal = float(np.sort(gains)[::-1] @ discounts)
    if ideal == 0.0:
        return 0.0
    return dcg / ideal


def recall_at_k(ranked: RankedResult, groundtruth_id: int, k: int) -> int:
    """1 iff the paired ground-truth gallery item appears in the top k."""
    return int(groundtruth_id in ranked.gallery_ids[:k])


def rsum(direction_reports: dict[str, dict[str, float]], ks: tuple[int, ...] = (1, 5, 10)) -> float:
    """Sum of mean recall@K percentages over both directions; 600 is perfect."""
    return float(sum(direction_reports[d][f"R@{k}"] * 100.0 for d in ("t2v", "v2t") for k in ks))


def evaluate(
    score_matrix: np.ndarray,
    annotations: Sequence[Annotation],
    direction: str,
    map_threshold: float = 1.0,
) -> dict[str, float]:
    """Mean AP, nDCG, and recall@{1,5,10} for one retrieval direction.

    score_matrix[i][j] scores text i against video j; samples are paired by
    index, so the ground truth of query i is gallery item i. direction "v2t"
    evaluates the transpose.
    """
    if direction not in ("t2v", "v2t"):
        raise ValueError(f"direction must be t2v or v2t, got {direction!r}")
    scores = np.asarray(score_matrix, dtype=np.float64)
    if direction == "v2t":
        scores = scores.T
    if scores.shape != (len(annotations), len(annotations)):
        raise ValueError("score matrix must be square over the paired samples")

    rel = relevance_matrix(annotations, annotations)
    aps, ndcgs = [], []
    recalls = {k: [] for k in (1, 5, 10)}
    for i in range(scores.shape[0]):
        ranked = rank_gallery(i, scores[i])
        aps.append(average_precision(ranked, rel[i] >= map_threshold))
        ndcgs.append(ndcg(ranked, rel[i]))
        for k in recalls:
            recalls[k].append(recall_at_k(ranked, i, k))
    report = {"mAP": float(np.mean(aps)), "nDCG": float(np.mean(ndcgs))}
    for k in recalls:
        report[f"R@{k}"] = float(np.mean(recalls[k]))
    return report


def full_report(
    score_matrix: np.ndarray,
    annotations: Sequence[Annotation],
    map_threshold: float = 1.0,
) -> dict:
    """Both directions plus their average and the recall sum, JSON-ready."""
    t2v = evaluate(score_matrix, annotations, "t2v", map_threshold)
    v2t = evaluate(score_matrix, annotations, "v2t", map_threshold)
    avg = {key: 0.5 * (t2v[key] + v2t[key]) for key in t2v}
    return {"t2v": t2v, "v2t": v2t, "t-v": avg, "Rsum": rsum({"t2v": t2v, "v2t": v2t})}
