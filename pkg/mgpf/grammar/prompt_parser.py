"""
    @file:              prompt_parser.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the rule grammar of the benchmark prompts and the functions that parse a
                        prompt into attribute-object pairs and split these pairs by alignment with the object masks.

                        prompt := "a" COLOR OBJECT [ "and" "a" COLOR OBJECT ] [ "," "a" [COLOR] OBJECT PREP "the" LOC ]
"""

import logging
import re
from typing import Collection, List, Optional, Sequence, Tuple

from mgpf.data_model import AttributeObjectPair, ParsedPrompt
from mgpf.errors import EmptyPrompt, GrammarMismatch
from mgpf.grammar.vocabulary import Vocabulary

_logger = logging.getLogger(__name__)

_WORD_PATTERN = re.compile(r"[^\s,]+|,")


def tokenize(prompt: str) -> List[str]:
    """
    Split a prompt into words. Commas are words of their own.

    Parameters
    ----------
    prompt : str
        Prompt text.

    Returns
    -------
    words : List[str]
        Lower-cased words.
    """
    return _WORD_PATTERN.findall(prompt.strip().lower())


class _WordStream:

    def __init__(self, words: Sequence[str], vocabulary: Vocabulary, prompt: str):
        self.words = words
        self.vocabulary = vocabulary
        self.prompt = prompt
        self.position = 0

    @property
    def exhausted(self) -> bool:
        return self.position >= len(self.words)

    def peek(self) -> Optional[str]:
        return None if self.exhausted else self.words[self.position]

    def peek_category(self) -> Optional[str]:
        return None if self.exhausted else self.vocabulary.category_of(self.words[self.position])

    def mismatch(self, expected: str) -> GrammarMismatch:
        found = "end of prompt" if self.exhausted else f"'{self.peek()}'"
        return GrammarMismatch(
            f"Prompt '{self.prompt}' does not match the benchmark grammar : expected {expected} at position "
            f"{self.position}, found {found}.",
            prompt=self.prompt,
            position=self.position
        )

    def expect_word(self, word: str) -> int:
        if self.peek() != word:
            raise self.mismatch(f"'{word}'")
        self.position += 1
        return self.position - 1

    def expect_category(self, category: str) -> int:
        if self.peek_category() != category:
            raise self.mismatch(f"a word of category '{category}'")
        self.position += 1
        return self.position - 1


def _parse_noun_phrase(stream: _WordStream, color_required: bool) -> Tuple[Optional[int], int]:
    stream.expect_word("a")
    attribute_index = None
    if color_required or stream.peek_category() == Vocabulary.COLOR:
        attribute_index = stream.expect_category(Vocabulary.COLOR)
    object_index = stream.expect_category(Vocabulary.OBJECT)

    return attribute_index, object_index


def split_alignment(
        pairs: Sequence[AttributeObjectPair],
        mask_names: Collection[str]
) -> Tuple[List[AttributeObjectPair], List[AttributeObjectPair]]:
    """
    Split attribute-object pairs into the pairs whose object has a mask (s1) and the others (s2). Order is preserved.

    Parameters
    ----------
    pairs : Sequence[AttributeObjectPair]
        Attribute-object pairs.
    mask_names : Collection[str]
        Names of the available object masks.

    Returns
    -------
    s1, s2 : Tuple[List[AttributeObjectPair], List[AttributeObjectPair]]
        Aligned and misaligned pairs.
    """
    mask_names = set(mask_names)
    s1 = [pair for pair in pairs if pair.object_name in mask_names]
    s2 = [pair for pair in pairs if pair.object_name not in mask_names]

    return s1, s2


def parse_prompt(
        prompt: str,
        mask_names: Collection[str],
        vocabulary: Vocabulary
) -> ParsedPrompt:
    """
    Parse a benchmark prompt into attribute-object pairs and split them by alignment with the masks.

    Parameters
    ----------
    prompt : str
        Prompt text.
    mask_names : Collection[str]
        Names of the object masks accompanying the prompt.
    vocabulary : Vocabulary
        Closed vocabulary.

    Returns
    -------
    parsed_prompt : ParsedPrompt
        Parsed prompt.
    """
    words = tokenize(prompt)
    if not words:
        raise EmptyPrompt("The prompt is empty.")

    tokens = [vocabulary.token_id(word) for word in words]
    stream = _WordStream(words, vocabulary, prompt)

    noun_phrases = [_parse_noun_phrase(stream, color_required=True)]
    if stream.peek() == "and":
        stream.expect_word("and")
        noun_phrases.append(_parse_noun_phrase(stream, color_required=True))

    free_objects, locations = [], []
    if stream.peek() == ",":
        stream.expect_word(",")
        attribute_index, object_index = _parse_noun_phrase(stream, color_required=False)
        if attribute_index is None:
            free_objects.append(object_index)
        else:
            noun_phrases.append((attribute_index, object_index))
        stream.expect_category(Vocabulary.PREPOSITION)
        stream.expect_word("the")
        locations.append(stream.expect_category(Vocabulary.LOCATION))

    if not stream.exhausted:
        raise stream.mismatch("end of prompt")

    pairs = [
        AttributeObjectPair(
            attribute_index=attribute_index,
            object_index=object_index,
            attribute=words[attribute_index],
            object_name=words[object_index]
        )
        for attribute_index, object_index in noun_phrases
    ]
    s1, s2 = split_alignment(pairs, mask_names)

    _logger.debug(f"Parsed prompt '{prompt}' : s1 = {[p[2:] for p in s1]}, s2 = {[p[2:] for p in s2]}.")

    return ParsedPrompt(
        prompt=prompt,
        words=words,
        tokens=tokens,
        pairs=pairs,
        s1=s1,
        s2=s2,
        free_objects=free_objects,
        locations=locations
    )


def render_prompt(parsed_prompt: ParsedPrompt) -> str:
    """
    Render a parsed prompt back to text with canonical whitespace.

    Parameters
    ----------
    parsed_prompt : ParsedPrompt
        Parsed prompt.

    Returns
    -------
    prompt : str
        Prompt text.
    """
    return " ".join(parsed_prompt.words).replace(" ,", ",")


def compose_prompt(
        main_pairs: Sequence[Tuple[str, str]],
        clause: Optional[Tuple[Optional[str], str, str, str]] = None
) -> str:
    """
    Write a prompt from its parts.

    Parameters
    ----------
    main_pairs : Sequence[Tuple[str, str]]
        One or two (color, object) pairs.
    clause : Optional[Tuple[Optional[str], str, str, str]]
        Trailing clause as (color or None, object, preposition, location).

    Returns
    -------
    prompt : str
        Prompt text.
    """
    prompt = " and ".join(f"a {color} {obj}" for color, obj in main_pairs)
    if clause is not None:
        color, obj, preposition, location = clause
        noun = f"{color} {obj}" if color else obj
        prompt += f", a {noun} {preposition} the {location}"

    return prompt
