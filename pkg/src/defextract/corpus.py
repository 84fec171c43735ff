"""Data model and file I/O for slot-tagged sentences.

The on-disk format is CoNLL-like: one ``token<TAB>tag`` pair per line and a
blank line between sentences. A JSONL export carries provenance
(``doc_id``/``sent_index``) alongside tokens and tags.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Raised for malformed CoNLL/JSONL input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SlotTag(str, enum.Enum):
    O = "O"
    B_TERM = "B-TERM"
    I_TERM = "I-TERM"
    B_DEF = "B-DEF"
    I_DEF = "I-DEF"

    def __str__(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return TAG_INDEX[self]

    @property
    def kind(self) -> str | None:
        """``"TERM"``, ``"DEF"`` or ``None`` for O."""
        return None if self is SlotTag.O else self.value[2:]

    @property
    def is_begin(self) -> bool:
        return self.value.startswith("B-")

    @property
    def is_inside(self) -> bool:
        return self.value.startswith("I-")

    @classmethod
    def parse(cls, s: str) -> "SlotTag":
        try:
            return cls(s)
        except ValueError:
            raise ValueError(f"unknown tag {s!r}") from None

    @classmethod
    def begin(cls, kind: str) -> "SlotTag":
        return cls("B-" + kind)

    @classmethod
    def inside(cls, kind: str) -> "SlotTag":
        return cls("I-" + kind)


# Canonical order; tie-breaking and weight matrices use these indices.
TAGS: tuple[SlotTag, ...] = tuple(SlotTag)
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
NUM_TAGS = len(TAGS)
KINDS = ("TERM", "DEF")

_MATH_TOKEN = re.compile(r"\$(?:\\.|[^$\\])+\$")


def _check_token_text(text: str) -> None:
    if not text:
        raise ValueError("empty token")
    if "\t" in text or "\n" in text or "\r" in text:
        raise ValueError(f"invalid token {text!r}: contains tab or newline")
    if any(c.isspace() for c in text):
        # Single spaces are tolerated only inside inline math regions.
        outside = _MATH_TOKEN.sub("", text)
        if any(c.isspace() for c in outside) or "  " in text:
            raise ValueError(f"invalid token {text!r}: internal whitespace")


@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        _check_token_text(self.text)
        if self.index < 0:
            raise ValueError("negative token index")


@dataclass(frozen=True)
class Span:
    kind: str
    start: int
    end: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown span kind {self.kind!r}")
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span bounds [{self.start},{self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: "Span") -> int:
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def indices(self) -> range:
        return range(self.start, self.end)


def is_valid_bio(tags: Sequence[SlotTag]) -> bool:
    prev = SlotTag.O
    for t in tags:
        t = SlotTag(t)
        if t.is_inside and prev.kind != t.kind:
            return False
        prev = t
    return True


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    gold_tags: tuple[SlotTag, ...] | None = None
    doc_id: str | None = None
    sent_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise ValueError(f"token {tok.text!r} has index {tok.index}, expected {i}")
        if self.gold_tags is not None:
            tags = tuple(SlotTag(t) for t in self.gold_tags)
            object.__setattr__(self, "gold_tags", tags)
            if len(tags) != len(self.tokens):
                raise ValueError(
                    f"{len(tags)} tags for {len(self.tokens)} tokens"
                )
            if not is_valid_bio(tags):
                raise ValueError("gold tags are not a valid BIO sequence")

    @classmethod
    def from_words(cls, words: Iterable[str], tags=None, doc_id=None, sent_index=None) -> "Sentence":
        toks = tuple(Token(w, i) for i, w in enumerate(words))
        if tags is not None:
            tags = tuple(SlotTag(t) for t in tags)
        return cls(toks, tags, doc_id, sent_index)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def key(self) -> tuple[str | None, int | None]:
        return (self.doc_id, self.sent_index)

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def __len__(self) -> int:
        return len(self.tokens)

    def with_tags(self, tags) -> "Sentence":
        return Sentence(self.tokens, tuple(tags), self.doc_id, self.sent_index)


@dataclass(frozen=True)
class Dataset:
    sentences: tuple[Sentence, ...]
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for i, s in enumerate(self.sentences):
            if s.gold_tags is None:
                raise ValueError(f"sentence {i} is unlabeled")

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    def subset(self, indices: Iterable[int], name: str | None = None) -> "Dataset":
        return Dataset(tuple(self.sentences[i] for i in indices), name or self.name)


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: tuple[int, ...]
    k: int

    def fold(self, f: int) -> list[int]:
        return [i for i, g in enumerate(self.fold_of) if g == f]

    def folds(self) -> list[list[int]]:
        return [self.fold(f) for f in range(self.k)]

    def sizes(self) -> list[int]:
        return [len(f) for f in self.folds()]


# --------------------------------------------------------------------------
# BIO <-> spans


def repair_bio_positions(tags: Sequence[SlotTag]) -> tuple[list[SlotTag], list[int]]:
    """Turn every orphan ``I-X`` into ``B-X``; return new tags and fixed positions."""
    out: list[SlotTag] = []
    fixed = []
    prev = SlotTag.O
    for i, t in enumerate(tags):
        t = SlotTag(t)
        if t.is_inside and prev.kind != t.kind:
            t = SlotTag.begin(t.kind)
            fixed.append(i)
        out.append(t)
        prev = t
    return out, fixed


def tags_to_spans(tags: Sequence[SlotTag]) -> list[Span]:
    tags = [SlotTag(t) for t in tags]
    if not is_valid_bio(tags):
        raise ValueError("invalid BIO sequence; repair it first")
    spans = []
    start = None
    kind = None
    for i, t in enumerate(tags):
        if t.is_inside:
            continue
        if start is not None:
            spans.append(Span(kind, start, i))
            start = None
        if t.is_begin:
            start, kind = i, t.kind
    if start is not None:
        spans.append(Span(kind, start, len(tags)))
    return spans


def spans_to_tags(spans: Iterable[Span], length: int) -> list[SlotTag]:
    tags = [SlotTag.O] * length
    for sp in spans:
        if sp.end > length:
            raise ValueError(f"span {sp} exceeds length {length}")
        for i in sp.indices():
            if tags[i] is not SlotTag.O:
                raise ValueError(f"overlapping spans at token {i}")
            tags[i] = SlotTag.begin(sp.kind) if i == sp.start else SlotTag.inside(sp.kind)
    return tags


# --------------------------------------------------------------------------
# CoNLL


def parse_conll(text: str, name: str = "conll") -> tuple[Dataset, list[str]]:
    """Parse ``token<TAB>tag`` text into a dataset.

    Returns the dataset plus a list of warnings. Orphan ``I-`` tags are
    repaired to ``B-`` (one warning each); columns beyond the second are
    ignored with a warning. Sentences get ``sent_index`` equal to their
    position and no ``doc_id``.
    """
    if not text.strip():
        raise ParseError("empty input")
    warnings: list[str] = []
    sentences: list[Sentence] = []
    words: list[str] = []
    tags: list[SlotTag] = []
    first_line = 0

    def flush():
        if not words:
            return
        fixed, positions = repair_bio_positions(tags)
        for i in positions:
            warnings.append(f"line {first_line + i}: orphan {tags[i].value} repaired to {fixed[i].value}")
        sentences.append(Sentence.from_words(words, fixed, None, len(sentences)))
        words.clear()
        tags.clear()

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            flush()
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ParseError("expected token<TAB>tag", lineno)
        if len(cols) > 2:
            warnings.append(f"line {lineno}: ignored {len(cols) - 2} extra column(s)")
        tok, tag = cols[0], cols[1].strip()
        try:
            _check_token_text(tok)
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        try:
            tags.append(SlotTag.parse(tag))
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        if not words:
            first_line = lineno
        words.append(tok)
    flush()
    for w in warnings:
        log.warning(w)
    return Dataset(tuple(sentences), name), warnings


def write_conll(d: Dataset | Iterable[Sentence]) -> str:
    sentences = d.sentences if isinstance(d, Dataset) else list(d)
    blocks = []
    for i, s in enumerate(sentences):
        if s.gold_tags is None:
            raise ValueError(f"sentence {i} is unlabeled")
        lines = []
        for tok, tag in zip(s.tokens, s.gold_tags):
            _check_token_text(tok.text)
            lines.append(f"{tok.text}\t{tag.value}")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


# --------------------------------------------------------------------------
# JSONL


def sentence_to_json(s: Sentence) -> dict:
    return {
        "doc_id": s.doc_id,
        "sent_index": s.sent_index,
        "tokens": s.words,
        "tags": None if s.gold_tags is None else [t.value for t in s.gold_tags],
    }


def sentence_from_json(obj: dict) -> Sentence:
    tags = obj.get("tags")
    return Sentence.from_words(
        obj["tokens"],
        None if tags is None else [SlotTag.parse(t) for t in tags],
        obj.get("doc_id"),
        obj.get("sent_index"),
    )


def write_jsonl(sentences: Iterable[Sentence]) -> str:
    return "".join(json.dumps(sentence_to_json(s), ensure_ascii=False) + "\n" for s in sentences)


def read_jsonl(text: str) -> list[Sentence]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(sentence_from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as e:
            raise ParseError(str(e), lineno) from None
    return out


def load_dataset(path, name: str | None = None) -> tuple[Dataset, list[str]]:
    """Load a ``.jsonl`` or CoNLL file (anything else) as a labeled dataset."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    name = name or path.stem
    if path.suffix == ".jsonl":
        if not text.strip():
            raise ParseError("empty input")
        return Dataset(tuple(read_jsonl(text)), name), []
    return parse_conll(text, name)


# --------------------------------------------------------------------------
# folds


def split_folds(d: Dataset | int, k: int, seed: int) -> FoldAssignment:
    """Balanced seeded k-fold assignment (fold sizes differ by at most one)."""
    n = d if isinstance(d, int) else len(d)
    if k < 2 or k > n:
        raise ValueError(f"k={k} out of range [2, {n}]")
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = [0] * n
    for pos, i in enumerate(perm):
        fold_of[int(i)] = pos % k
    return FoldAssignment(tuple(fold_of), k)
