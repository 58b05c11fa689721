"""Mapping caption word sequences to verb/noun semantic-class sets.

A Lexicon inverts a SemanticClassTable: every surface form (single- or
multi-word) points back to its class. Captions are segmented with a single
greedy longest-match scan over the union of both tables, so a multi-word
noun like "washing up liquid" is consumed as one entity even if one of its
words also happens to be a verb form. Words matching no entry are skipped,
the way a tagger ignores function words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import CorpusValidationError, SemanticClassTable

VERB = "verb"
NOUN = "noun"


@dataclass(frozen=True)
class Segment:
    """One matched lexicon entry inside a caption."""

    kind: str  # VERB or NOUN
    class_id: int
    start: int  # word offset in the caption
    words: tuple[str, ...]

    @property
    def surface(self) -> str:
        return " ".join(self.words)


class Lexicon:
    """Immutable token-to-class lookup shared by the whole pipeline."""

    def __init__(self, table: SemanticClassTable):
        self.table = table
        self._entries: dict[tuple[str, ...], tuple[str, int]] = {}
        self._max_words = 1
        for kind, classes in ((VERB, table.verb_classes), (NOUN, table.noun_classes)):
            for cid, tokens in classes.items():
                for tok in tokens:
                    words = tuple(tok.split(" "))
                    if words in self._entries:
                        raise CorpusValidationError(
                            f"surface token {tok!r} appears in both the verb and noun tables"
                        )
                    self._entries[words] = (kind, cid)
                    self._max_words = max(self._max_words, len(words))

    def segments(self, caption_tokens: Sequence[str]) -> list[Segment]:
        """Greedy longest-match segmentation, scanning left to right."""
        words = list(caption_tokens)
        out: list[Segment] = []
        i = 0
        while i < len(words):
            matched = None
            for length in range(min(self._max_words, len(words) - i), 0, -1):
                candidate = tuple(words[i : i + length])
                hit = self._entries.get(candidate)
                if hit is not None:
                    matched = Segment(kind=hit[0], class_id=hit[1], start=i, words=candidate)
                    break
            if matched is None:
                i += 1
            else:
                out.append(matched)
                i += len(matched.words)
        return out

    def actions(self, caption_tokens: Sequence[str]) -> set[int]:
        """Verb class ids of all matched verb tokens."""
        return {s.class_id for s in self.segments(caption_tokens) if s.kind == VERB}

    def entities(self, caption_tokens: Sequence[str]) -> set[int]:
        """Noun class ids of all matched noun tokens."""
        return {s.class_id for s in self.segments(caption_tokens) if s.kind == NOUN}

    def surface_forms(self, kind: str, class_id: int) -> list[str]:
        classes = self.table.verb_classes if kind == VERB else self.table.noun_classes
        return classes[class_id]

    def all_surface_forms(self) -> Iterable[str]:
        """Every surface form of both tables, in a deterministic order."""
        for classes in (self.table.verb_classes, self.table.noun_classes):
            for cid in sorted(classes):
                yield from classes[cid]
