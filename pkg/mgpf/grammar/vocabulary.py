"""
    @file:              vocabulary.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the Vocabulary class, the closed and category-tagged word list shared by the
                        prompt grammar, the token embedder and the benchmark generator. Token id 0 is reserved for the
                        null prompt; words take ids 1..N in file order.
"""

import logging
import os
from typing import Dict, List, Sequence, Tuple

from mgpf.errors import UnknownToken, UnknownWord
from mgpf.utils import canonical_digest, is_path_valid

_logger = logging.getLogger(__name__)

PATH_TO_DEFAULT_VOCABULARY = os.path.join(os.path.dirname(os.path.dirname(__file__)), "resources", "vocabulary.txt")


class Vocabulary:
    """
    A closed vocabulary whose words are tagged with a category (color, object, loc, prep, conn).
    """

    NULL_TOKEN = "<null>"
    NULL_TOKEN_ID = 0

    COLOR = "color"
    OBJECT = "object"
    LOCATION = "loc"
    PREPOSITION = "prep"
    CONNECTIVE = "conn"

    CATEGORIES = (COLOR, OBJECT, LOCATION, PREPOSITION, CONNECTIVE)

    def __init__(self, entries: Sequence[Tuple[str, str]]):
        """
        Constructor of the Vocabulary class.

        Parameters
        ----------
        entries : Sequence[Tuple[str, str]]
            Ordered (category, word) entries.
        """
        self._entries: List[Tuple[str, str]] = []
        self._word_to_id: Dict[str, int] = {}
        self._categories: Dict[str, str] = {}

        for category, word in entries:
            if category not in self.CATEGORIES:
                raise ValueError(f"Unknown vocabulary category {category} for word {word}. Available categories are "
                                 f"{list(self.CATEGORIES)}.")
            if word in self._word_to_id:
                raise ValueError(f"Word {word} appears twice in the vocabulary.")

            self._entries.append((category, word))
            self._word_to_id[word] = len(self._entries)
            self._categories[word] = category

    @classmethod
    def from_file(cls, path: str) -> "Vocabulary":
        """
        Read a vocabulary file, one `category:word` entry per line. Blank lines and lines starting with '#' are ignored.

        Parameters
        ----------
        path : str
            Path to the vocabulary file.

        Returns
        -------
        vocabulary : Vocabulary
            Vocabulary.
        """
        is_path_valid(path)

        entries = []
        with open(path, "r", encoding="utf-8") as file:
            for line in file:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue

                category, _, word = line.partition(":")
                entries.append((category.strip(), word.strip()))

        _logger.debug(f"Read {len(entries)} words from vocabulary file {path}.")

        return cls(entries)

    @classmethod
    def default(cls) -> "Vocabulary":
        return cls.from_file(PATH_TO_DEFAULT_VOCABULARY)

    def __len__(self) -> int:
        """
        Number of token ids, null token included.
        """
        return len(self._entries) + 1

    def __contains__(self, word: str) -> bool:
        return word in self._word_to_id

    @property
    def entries(self) -> List[Tuple[str, str]]:
        return list(self._entries)

    def token_id(self, word: str) -> int:
        if word not in self._word_to_id:
            raise UnknownWord(f"Word '{word}' is not in the vocabulary.", word=word)

        return self._word_to_id[word]

    def word(self, token_id: int) -> str:
        if token_id == self.NULL_TOKEN_ID:
            return self.NULL_TOKEN
        if not 0 < token_id <= len(self._entries):
            raise UnknownToken(f"Token id {token_id} is not in the vocabulary.", token_id=token_id)

        return self._entries[token_id - 1][1]

    def category_of(self, word: str) -> str:
        if word not in self._categories:
            raise UnknownWord(f"Word '{word}' is not in the vocabulary.", word=word)

        return self._categories[word]

    def words_of(self, category: str) -> List[str]:
        return [word for entry_category, word in self._entries if entry_category == category]

    @property
    def colors(self) -> List[str]:
        return self.words_of(self.COLOR)

    @property
    def objects(self) -> List[str]:
        return self.words_of(self.OBJECT)

    @property
    def locations(self) -> List[str]:
        return self.words_of(self.LOCATION)

    @property
    def prepositions(self) -> List[str]:
        return self.words_of(self.PREPOSITION)

    def digest(self) -> str:
        """
        Stable digest of the ordered entries, written in checkpoint headers.
        """
        return canonical_digest([list(entry) for entry in self._entries])
