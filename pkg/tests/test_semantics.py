"""Verb/noun class extraction from captions."""

import pytest

from cmaug import (
    CorpusValidationError,
    GenConfig,
    Lexicon,
    SemanticClassTable,
    generate_synthetic,
)

from helpers import TOY_TABLE, FORK, PIZZA, SPOON, TAKE, WASH


@pytest.fixture
def lexicon():
    return Lexicon(TOY_TABLE)


def test_action_extraction(lexicon):
    assert lexicon.actions("pick a slice of pizza".split()) == {TAKE}


def test_entity_longest_match_wins(lexicon):
    # "slice of pizza" must be one entity, not the bare "pizza" class.
    assert lexicon.entities("pick a slice of pizza".split()) == {PIZZA}
    assert lexicon.entities("pick a pizza".split()) == {PIZZA}


def test_empty_caption(lexicon):
    assert lexicon.actions([]) == set()
    assert lexicon.entities([]) == set()


def test_noun_only_caption_has_no_actions(lexicon):
    assert lexicon.actions(["fork", "spoon"]) == set()


def test_single_and_multiple_noun_matches(lexicon):
    assert lexicon.entities("wash fork".split()) == {FORK}
    assert lexicon.entities("wash fork spoon".split()) == {FORK, SPOON}
    assert lexicon.actions("wash fork spoon".split()) == {WASH}


def test_unknown_tokens_are_skipped(lexicon):
    assert lexicon.actions("please take the fork now".split()) == {TAKE}
    assert lexicon.entities("please take the fork now".split()) == {FORK}


def test_multiword_noun_shields_inner_verb():
    # "washing up liquid" contains a word that is also a verb form; the
    # segmentation must consume the noun phrase whole.
    table = SemanticClassTable(
        verb_classes={0: ["wash", "washing"]},
        noun_classes={0: ["washing up liquid", "detergent"], 1: ["fork"]},
    )
    lex = Lexicon(table)
    tokens = "wash washing up liquid".split()
    assert lex.actions(tokens) == {0}
    assert lex.entities(tokens) == {0}


def test_token_in_both_tables_rejected():
    table = SemanticClassTable(
        verb_classes={0: ["wash"]},
        noun_classes={0: ["wash"], 1: ["fork"]},
    )
    with pytest.raises(CorpusValidationError, match="both"):
        Lexicon(table)


def test_extraction_is_pure(lexicon):
    tokens = "take slice of pizza".split()
    assert lexicon.actions(tokens) == lexicon.actions(tokens)
    assert lexicon.entities(tokens) == lexicon.entities(tokens)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generator_and_lexicon_agree(seed):
    corpus = generate_synthetic(
        GenConfig(verb_classes=5, noun_classes=7, samples=60, synonyms_per_class=3), seed=seed
    )
    lex = Lexicon(corpus.class_table)
    for s in corpus:
        assert lex.actions(s.caption_tokens) == set(s.annotation.verb_set)
        assert lex.entities(s.caption_tokens) == set(s.annotation.noun_set)


def test_surface_forms_lookup(lexicon):
    assert lexicon.surface_forms("verb", TAKE) == ["take", "pick", "grab"]
    assert lexicon.surface_forms("noun", PIZZA) == ["pizza", "slice of pizza"]
