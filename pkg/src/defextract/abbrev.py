"""Schwartz & Hearst (2003) abbreviation detection over tokenized sentences.

Only the ``long form ( SHORT )`` orientation is handled. The short form is
matched right to left against the words in front of the opening parenthesis.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Sentence


@dataclass(frozen=True)
class AbbreviationPair:
    short_form: str
    short_start: int  # token range of the short form
    short_end: int
    long_start: int  # token range of the long form
    long_end: int

    def long_form(self, words) -> str:
        return " ".join(words[self.long_start:self.long_end])


def max_long_words(short: str) -> int:
    n = len(short)
    return min(n + 5, 2 * n)


def is_short_form_candidate(short: str) -> bool:
    return (
        2 <= len(short) <= 10
        and len(short.split()) <= 2
        and any(c.isalpha() for c in short)
        and short[0].isalnum()
    )


def match_long_form(short: str, long: str) -> int | None:
    """Return the character offset where the long form starts, or None.

    Walks both strings from the right. Every alphanumeric short-form
    character must appear in order; the first one must additionally sit at
    the start of a word.
    """
    s = len(short) - 1
    l = len(long) - 1
    while s >= 0:
        c = short[s].lower()
        if not c.isalnum():
            s -= 1
            continue
        while l >= 0 and (
            long[l].lower() != c or (s == 0 and l > 0 and long[l - 1].isalnum())
        ):
            l -= 1
        if l < 0:
            return None
        s -= 1
        l -= 1
    # the loop leaves l one position before the match of the first character
    start = l + 1
    return start


def detect_abbreviations(sentence: Sentence | list[str]) -> list[AbbreviationPair]:
    words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
    pairs = []
    for open_i, w in enumerate(words):
        if w != "(":
            continue
        try:
            close_i = words.index(")", open_i + 1)
        except ValueError:
            continue
        if not 1 <= close_i - open_i - 1 <= 2:
            continue
        short = " ".join(words[open_i + 1:close_i])
        if not is_short_form_candidate(short):
            continue
        window_start = max(0, open_i - max_long_words(short))
        window = words[window_start:open_i]
        if not window:
            continue
        # word-aligned character offsets of the window
        offsets = []
        pos = 0
        for tok in window:
            offsets.append(pos)
            pos += len(tok) + 1
        long = " ".join(window)
        start = match_long_form(short, long)
        if start is None:
            continue
        first_tok = max(i for i, off in enumerate(offsets) if off <= start)
        long_words = window[first_tok:]
        long_text = " ".join(long_words)
        if len(long_text) < len(short):
            continue
        if short in long_words:
            continue
        if long_text.count("(") != long_text.count(")"):
            continue
        if len(long_words) > max_long_words(short):
            continue
        pairs.append(
            AbbreviationPair(short, open_i + 1, close_i, window_start + first_tok, open_i)
        )
    return pairs
