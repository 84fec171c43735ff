"""Turn TeX-flavoured document text into tokenized sentences.

Citations, cross references and display math are replaced by placeholder
tokens; inline ``$...$`` math is kept verbatim and treated as atomic by both
the segmenter and the tokenizer.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .corpus import Sentence, Token


class PreprocessError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)


class Placeholder(str, enum.Enum):
    CITATION = "CITATION"
    FIGURE = "FIGURE"
    TABLE = "TABLE"
    SECTION = "SECTION"
    EQUATION = "EQUATION"


PLACEHOLDERS = frozenset(p.value for p in Placeholder)

REF_PREFIXES = {"fig": Placeholder.FIGURE, "tab": Placeholder.TABLE, "sec": Placeholder.SECTION}

MATH_ENVS = r"equation|align|gather|multline|eqnarray|displaymath|flalign|alignat"

_INLINE = r"\$(?:\\.|[^$\\])+\$"

_NORMALIZE_RE = re.compile(
    r"(?P<esc>\\\$)"
    r"|(?P<dd>\$\$.*?\$\$)"
    r"|(?P<br>\\\[.*?\\\])"
    r"|(?P<env>\\begin\{(?P<envname>" + MATH_ENVS + r")(?P<star>\*?)\}.*?\\end\{(?P=envname)(?P=star)\})"
    r"|(?P<inline>" + _INLINE + r")"
    r"|(?P<cite>~?\\cite[a-zA-Z]*\*?(?:\[[^\]]*\]){0,2}\{[^}]*\})"
    r"|(?P<ref>~?\\(?:auto|c|C)?ref\*?\{(?P<label>[^}]*)\})"
    r"|(?P<lone>\$)",
    re.DOTALL,
)

# inline math, escaped dollars, and stray dollars (errors)
_MATH_SCAN_RE = re.compile(r"(?P<esc>\\\$)|(?P<inline>" + _INLINE + r")|(?P<lone>\$)", re.DOTALL)


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    body: str


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _ref_placeholder(label: str) -> Placeholder:
    first = label.split(",")[0].strip()
    prefix = first.split(":", 1)[0].lower() if ":" in first else ""
    return REF_PREFIXES.get(prefix, Placeholder.SECTION)


def normalize_text(text: str) -> str:
    out = []
    pos = 0
    for m in _NORMALIZE_RE.finditer(text):
        kind = m.lastgroup
        if kind in ("esc", "inline"):
            continue
        if m.group("lone") is not None:
            raise PreprocessError("unbalanced $ delimiter", _byte_offset(text, m.start()))
        if m.group("cite") is not None:
            ph = Placeholder.CITATION
        elif m.group("ref") is not None:
            ph = _ref_placeholder(m.group("label"))
        else:
            ph = Placeholder.EQUATION
        s, e = m.start(), m.end()
        out.append(text[pos:s])
        matched = m.group(0)
        # keep placeholders separated from neighbouring words
        lead = " " if matched.startswith("~") or (s > 0 and text[s - 1].isalnum()) else ""
        trail = " " if e < len(text) and text[e].isalnum() else ""
        out.append(lead + ph.value + trail)
        pos = e
    out.append(text[pos:])
    return "".join(out)


def normalize(doc: RawDocument) -> RawDocument:
    """Substitute placeholders for citations, references and display math."""
    try:
        return RawDocument(doc.doc_id, normalize_text(doc.body))
    except PreprocessError as e:
        raise PreprocessError(f"{doc.doc_id}: {e}") from None


# --------------------------------------------------------------------------
# segmentation


@lru_cache(maxsize=None)
def _default_abbreviations() -> frozenset[str]:
    text = resources.files("defextract").joinpath("data/abbreviations.txt").read_text("utf-8")
    return _parse_abbreviations(text)


def _parse_abbreviations(text: str) -> frozenset[str]:
    return frozenset(
        line.strip().lower() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def load_abbreviations(path=None) -> frozenset[str]:
    if path is None:
        return _default_abbreviations()
    return _parse_abbreviations(Path(path).read_text("utf-8"))


def _math_regions(text: str) -> list[tuple[int, int]]:
    regions = []
    for m in _MATH_SCAN_RE.finditer(text):
        if m.lastgroup == "lone":
            raise PreprocessError("unbalanced $ delimiter", _byte_offset(text, m.start()))
        if m.lastgroup == "inline":
            regions.append((m.start(), m.end()))
    return regions


_BOUNDARY_RE = re.compile(r"[.!?]+[\"')\]]*(?=\s)")
_PARAGRAPH_RE = re.compile(r"\n[ \t\r\f\v]*\n")
_LEADING = "([{\"'"


def _ends_with_abbreviation(prefix: str, abbreviations: frozenset[str]) -> bool:
    words = prefix.split()
    if not words:
        return False
    last = words[-1].lstrip(_LEADING).lower()
    if last in abbreviations:
        return True
    if len(words) >= 2 and f"{words[-2].lstrip(_LEADING).lower()} {last}" in abbreviations:
        return True
    return False


def _starts_sentence(text: str, i: int) -> bool:
    rest = text[i:]
    if not rest:
        return False
    if any(rest.startswith(p) for p in PLACEHOLDERS):
        return True
    return rest[0].isupper()


def segment_text(text: str, abbreviations: frozenset[str] | None = None) -> list[str]:
    """Split normalized text into sentence strings.

    Splits on ``.``/``!``/``?`` followed by whitespace and an uppercase letter
    or placeholder, skipping inline math and known abbreviations, and on
    blank lines. Whitespace runs between sentences are the only characters
    dropped.
    """
    if abbreviations is None:
        abbreviations = _default_abbreviations()
    regions = _math_regions(text)

    def in_math(i: int) -> bool:
        return any(s <= i < e for s, e in regions)

    cuts = set()
    for m in _BOUNDARY_RE.finditer(text):
        if in_math(m.start()):
            continue
        j = m.end()
        while j < len(text) and text[j].isspace():
            j += 1
        if not _starts_sentence(text, j):
            continue
        word_end = m.start() + 1  # abbreviation lists include the first period
        if m.group(0).startswith(".") and _ends_with_abbreviation(text[:word_end], abbreviations):
            continue
        cuts.add(m.end())
    for m in _PARAGRAPH_RE.finditer(text):
        if not in_math(m.start()):
            cuts.add(m.start())

    pieces = []
    prev = 0
    for c in sorted(cuts):
        pieces.append(text[prev:c])
        prev = c
    pieces.append(text[prev:])
    return [" ".join(p.split()) for p in pieces if p.strip()]


def segment(doc: RawDocument, abbreviations: frozenset[str] | None = None) -> list[Sentence]:
    """Segment an already-normalized document into untagged sentences."""
    return [
        Sentence(tuple(tokenize(s)), None, doc.doc_id, i)
        for i, s in enumerate(segment_text(doc.body, abbreviations))
    ]


# --------------------------------------------------------------------------
# tokenization

PUNCT = frozenset('.,;:!?()[]{}"')

_TOKEN_RE = re.compile(
    r"(?P<chunk>(?:" + _INLINE + r"|\\\$|[^\s$])+)|(?P<ws>\s+)|(?P<lone>\$)", re.DOTALL
)
_INLINE_RE = re.compile(_INLINE, re.DOTALL)


def _split_chunk(chunk: str) -> list[str]:
    lead = []
    i = 0
    while i < len(chunk) and chunk[i] in PUNCT:
        lead.append(chunk[i])
        i += 1
    j = len(chunk)
    trail = []
    while j > i and chunk[j - 1] in PUNCT:
        trail.append(chunk[j - 1])
        j -= 1
    core = [chunk[i:j]] if j > i else []
    return lead + core + trail[::-1]


def tokenize_words(text: str) -> list[str]:
    words = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m.lastgroup == "lone":
            raise PreprocessError("unbalanced $ delimiter", _byte_offset(text, pos))
        if m.lastgroup == "chunk":
            chunk = _INLINE_RE.sub(lambda mm: " ".join(mm.group(0).split()), m.group(0))
            words.extend(_split_chunk(chunk))
        pos = m.end()
    return words


def tokenize(sentence_text: str) -> list[Token]:
    """Whitespace tokenization with punctuation splitting and atomic inline math."""
    return [Token(w, i) for i, w in enumerate(tokenize_words(sentence_text))]


def is_math_token(text: str) -> bool:
    return _INLINE_RE.fullmatch(text) is not None


def is_placeholder(text: str) -> bool:
    return text in PLACEHOLDERS


def preprocess_document(doc: RawDocument, abbreviations: frozenset[str] | None = None) -> list[Sentence]:
    return segment(normalize(doc), abbreviations)
