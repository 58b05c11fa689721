"""Candidate lookup: which other samples may stand in for a given one.

A sample w is a valid video substitute for v, given a verb class a, when w
also carries class a and (in fine mode) shares at least one noun class with
v; symmetrically for a noun class with shared verbs. Coarse mode keeps only
the shared-class requirement. Caption substitutes use the same predicates
over caption annotations; with one caption per video the id sets coincide,
but the lookups are exposed separately so video and caption partners are
drawn independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .corpus import Annotation, Corpus


class SelectionMode(str, Enum):
    FINE = "fine"
    COARSE = "coarse"


@dataclass
class CandidateIndex:
    """Per-class postings lists plus the annotations needed for fine mode."""

    mode: SelectionMode
    by_verb: dict[int, list[int]]
    by_noun: dict[int, list[int]]
    annotations: list[Annotation]

    def video_partners_by_verb(self, verb_class: int, sample_id: int, exclude_self: bool = True) -> list[int]:
        """Videos carrying verb_class that satisfy the index mode for sample_id."""
        return self._query(self.by_verb, verb_class, sample_id, exclude_self, check_nouns=True)

    def video_partners_by_noun(self, noun_class: int, sample_id: int, exclude_self: bool = True) -> list[int]:
        """Videos carrying noun_class that satisfy the index mode for sample_id."""
        return self._query(self.by_noun, noun_class, sample_id, exclude_self, check_nouns=False)

    def caption_partners_by_verb(self, verb_class: int, sample_id: int, exclude_self: bool = True) -> list[int]:
        """Captions carrying verb_class; same predicate evaluated over caption annotations."""
        return self._query(self.by_verb, verb_class, sample_id, exclude_self, check_nouns=True)

    def caption_partners_by_noun(self, noun_class: int, sample_id: int, exclude_self: bool = True) -> list[int]:
        """Captions carrying noun_class; same predicate evaluated over caption annotations."""
        return self._query(self.by_noun, noun_class, sample_id, exclude_self, check_nouns=False)

    def _query(
        self,
        postings: dict[int, list[int]],
        class_id: int,
        sample_id: int,
        exclude_self: bool,
        check_nouns: bool,
    ) -> list[int]:
        candidates = postings.get(class_id, [])
        anchor = self.annotations[sample_id]
        out = []
        for w in candidates:
            if exclude_self and w == sample_id:
                continue
            if self.mode is SelectionMode.FINE:
                other = self.annotations[w]
                if check_nouns:
                    if not (anchor.noun_set & other.noun_set):
                        continue
                elif not (anchor.verb_set & other.verb_set):
                    continue
            out.append(w)
        return out


def build_index(corpus: Corpus, mode: SelectionMode) -> CandidateIndex:
    """Invert corpus annotations into sorted, duplicate-free postings lists."""
    by_verb: dict[int, list[int]] = {c: [] for c in corpus.class_table.verb_classes}
    by_noun: dict[int, list[int]] = {c: [] for c in corpus.class_table.noun_classes}
    for sample in corpus:
        for c in sorted(sample.annotation.verb_set):
            by_verb[c].append(sample.id)
        for c in sorted(sample.annotation.noun_set):
            by_noun[c].append(sample.id)
    return CandidateIndex(
        mode=SelectionMode(mode),
        by_verb=by_verb,
        by_noun=by_noun,
        annotations=corpus.annotations,
    )
