"""Per-token binary features for the CRF tagger.

Features are strings of the form ``template:value``. Besides lexical and
window templates there are coarse rule-based POS tags, surface-pattern cue
flags read from a pattern inventory file, Schwartz-Hearst abbreviation flags
and optional precomputed annotations (POS, dependency heads, entities).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .abbrev import detect_abbreviations
from .corpus import NUM_TAGS, ParseError, Sentence
from .preprocess import PUNCT, is_math_token, is_placeholder

BOS = "<BOS>"
EOS = "<EOS>"
WINDOW = 2

FeatureVector = frozenset  # of str

# --------------------------------------------------------------------------
# coarse POS

_CLOSED = {
    "DET": "a an the this that these those each every some any no its their our his her my your "
    "all both another such",
    "PREP": "of in on at by for with from to into onto over under between among through during "
    "without within about against across after before behind below beside beyond via per than "
    "as upon toward towards along around like",
    "VERB": "is are was were be been being am has have had do does did can could may might must "
    "shall should will would define defines defined denote denotes denoted refer refers referred "
    "call called know known compute computes computed use uses used contain contains consist "
    "consists represent represents mean means combine combines model models provide provides "
    "involve involves allow allows run runs describe describes",
    "ADV": "not also very often only then thus however therefore too well here there just",
    "OTHER": "and or but nor so yet if while because although whether which who whom whose where "
    "when what it they we he she i you them us him me",
}
CLOSED_CLASS = {w: tag for tag, words in _CLOSED.items() for w in words.split()}

_SUFFIX_RULES = (
    ("ADV", ("ly",)),
    ("VERB", ("ing", "ed", "ize", "ise", "izes", "ises", "ify", "ifies")),
    ("ADJ", ("ous", "ive", "able", "ible", "al", "ful", "less", "ic", "ical", "ary", "ent", "ant")),
)

_NUM_RE = re.compile(r"[+-]?\d[\d,.]*%?")

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "DET", "PREP", "PUNCT", "NUM", "MATH", "OTHER")


def coarse_pos(word: str) -> str:
    if is_math_token(word) or word.startswith("$"):
        return "MATH"
    if is_placeholder(word):
        return "NUM" if word == "EQUATION" else "NOUN"
    if _NUM_RE.fullmatch(word):
        return "NUM"
    if all(c in PUNCT or not c.isalnum() for c in word):
        return "PUNCT"
    low = word.lower()
    if low in CLOSED_CLASS:
        return CLOSED_CLASS[low]
    if word.isupper() and len(word) > 1:
        return "NOUN"
    for tag, suffixes in _SUFFIX_RULES:
        if any(low.endswith(s) and len(low) > len(s) + 2 for s in suffixes):
            return tag
    if any(c.isalpha() for c in word):
        return "NOUN"
    return "OTHER"


def word_shape(word: str) -> str:
    if word.startswith("$"):
        return "$"
    out = []
    for c in word:
        if c.isupper():
            k = "X"
        elif c.islower():
            k = "x"
        elif c.isdigit():
            k = "d"
        else:
            k = c
        if not out or out[-1] != k:
            out.append(k)
    return "".join(out)


def _ascii(s: str) -> str:
    return s.encode("ascii", "backslashreplace").decode("ascii")


# --------------------------------------------------------------------------
# surface patterns


@dataclass(frozen=True)
class Pattern:
    flag: str
    regex: str

    def compiled(self) -> re.Pattern:
        return _compile(self.regex)


@lru_cache(maxsize=None)
def _compile(rx: str) -> re.Pattern:
    return re.compile(r"(?<!\S)(?:" + rx + r")(?!\S)", re.IGNORECASE)


@dataclass(frozen=True)
class PatternInventory:
    patterns: tuple[Pattern, ...]
    version: str = "1"

    @classmethod
    def parse(cls, text: str) -> "PatternInventory":
        patterns = []
        version = "1"
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*version:\s*(\S+)", line)
                if m:
                    version = m.group(1)
                continue
            flag, sep, rx = line.partition("\t")
            if not sep or not flag or not rx:
                raise ParseError("expected FLAG<TAB>regex", lineno)
            try:
                _compile(rx)
            except re.error as e:
                raise ParseError(f"bad regex for {flag}: {e}", lineno) from None
            patterns.append(Pattern(flag, rx))
        return cls(tuple(patterns), version)

    @classmethod
    def load(cls, path) -> "PatternInventory":
        return cls.parse(Path(path).read_text("utf-8"))

    @classmethod
    def default(cls) -> "PatternInventory":
        return _default_inventory()

    def to_text(self) -> str:
        return f"# version: {self.version}\n" + "".join(f"{p.flag}\t{p.regex}\n" for p in self.patterns)


@lru_cache(maxsize=None)
def _default_inventory() -> PatternInventory:
    text = resources.files("defextract").joinpath("data/patterns.tsv").read_text("utf-8")
    return PatternInventory.parse(text)


def pattern_flags(sentence: Sentence | Sequence[str], inventory: PatternInventory | None = None) -> list[set[str]]:
    """Cue flags per token.

    Matched tokens carry the cue flag (or their named group's flag); tokens up
    to two positions outside a match carry ``FLAG@+d``/``FLAG@-d`` where the
    offset points from the token to the cue.
    """
    words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
    inventory = inventory or PatternInventory.default()
    flags: list[set[str]] = [set() for _ in words]
    if not words:
        return flags
    starts = []
    pos = 0
    for w in words:
        starts.append(pos)
        pos += len(w) + 1
    text = " ".join(words)

    def tok_range(s: int, e: int) -> range:
        first = next(i for i in range(len(words)) if starts[i] + len(words[i]) > s)
        last = max(i for i in range(len(words)) if starts[i] < e)
        return range(first, last + 1)

    for pat in inventory.patterns:
        rx = pat.compiled()
        for m in rx.finditer(text):
            if m.end() == m.start():
                continue
            covered = tok_range(m.start(), m.end())
            grouped = set()
            for name, val in m.groupdict().items():
                if val is None or m.start(name) == m.end(name):
                    continue
                for i in tok_range(m.start(name), m.end(name)):
                    flags[i].add(name)
                    grouped.add(i)
            for i in covered:
                if i not in grouped:
                    flags[i].add(pat.flag)
            for d in range(1, WINDOW + 1):
                if covered.start - d >= 0:
                    flags[covered.start - d].add(f"{pat.flag}@+{d}")
                if covered.stop - 1 + d < len(words):
                    flags[covered.stop - 1 + d].add(f"{pat.flag}@-{d}")
    return flags


# --------------------------------------------------------------------------
# extraction


@dataclass(frozen=True)
class Annotation:
    """Precomputed per-token annotations for one sentence."""

    pos: tuple[str, ...] | None = None
    heads: tuple[int, ...] | None = None
    entities: tuple[str, ...] | None = None


@dataclass(frozen=True)
class FeatureExtractor:
    inventory: PatternInventory = field(default_factory=PatternInventory.default)
    use_abbreviations: bool = True

    def extract(self, sentence: Sentence, annotation: Annotation | None = None) -> list[frozenset[str]]:
        return extract(sentence, self.inventory, annotation, self.use_abbreviations)

    def to_dict(self) -> dict:
        return {"patterns": self.inventory.to_text(), "use_abbreviations": self.use_abbreviations}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureExtractor":
        return cls(PatternInventory.parse(d["patterns"]), d.get("use_abbreviations", True))


def _token_features(word: str, pos: str) -> list[str]:
    low = _ascii(word.lower())
    f = ["bias", f"w:{low}", f"shape:{_ascii(word_shape(word))}", f"pos:{pos}"]
    for n in (2, 3, 4):
        if len(word) > n:
            f.append(f"pre{n}:{low[:n]}")
            f.append(f"suf{n}:{low[-n:]}")
    if word.startswith("$"):
        f.append("math")
    if is_placeholder(word):
        f.append("placeholder")
    if word[0].isupper():
        f.append("cap")
    if word.isupper() and len(word) > 1:
        f.append("allcaps")
    return f


def extract(
    sentence: Sentence,
    inventory: PatternInventory | None = None,
    annotation: Annotation | None = None,
    use_abbreviations: bool = True,
) -> list[frozenset[str]]:
    """One feature set per token. Deterministic and depends only on local context."""
    words = sentence.words
    n = len(words)
    pos = [coarse_pos(w) for w in words]
    flags = pattern_flags(words, inventory)
    out = []
    for i, w in enumerate(words):
        f = _token_features(w, pos[i])
        for d in range(1, WINDOW + 1):
            for off in (-d, d):
                j = i + off
                if 0 <= j < n:
                    nw, npos = _ascii(words[j].lower()), pos[j]
                else:
                    nw = npos = BOS if j < 0 else EOS
                f.append(f"w[{off:+d}]:{nw}")
                f.append(f"pos[{off:+d}]:{npos}")
        f.append(f"pos[-1]|pos[+1]:{pos[i - 1] if i else BOS}|{pos[i + 1] if i + 1 < n else EOS}")
        f.extend(f"pattern:{flag}" for flag in flags[i])
        out.append(f)
    if use_abbreviations:
        for pair in detect_abbreviations(words):
            for i in range(pair.short_start, pair.short_end):
                out[i].append("abbr:SHORT")
            for i in range(pair.long_start, pair.long_end):
                out[i].append("abbr:LONG_B" if i == pair.long_start else "abbr:LONG_I")
    if annotation is not None:
        _annotation_features(out, annotation, n)
    return [frozenset(f) for f in out]


def _annotation_features(out: list[list[str]], ann: Annotation, n: int) -> None:
    for name, seq in (("pos", ann.pos), ("heads", ann.heads), ("entities", ann.entities)):
        if seq is not None and len(seq) != n:
            raise ValueError(f"annotation {name} has {len(seq)} entries for {n} tokens")
    for i in range(n):
        if ann.pos is not None:
            out[i].append(f"xpos:{_ascii(ann.pos[i])}")
        if ann.heads is not None:
            h = ann.heads[i]
            if h < 0:
                out[i].append("dep:root")
            else:
                out[i].append(f"dep:dir={'L' if h < i else 'R'}")
                if ann.pos is not None:
                    out[i].append(f"dep:headpos={_ascii(ann.pos[h])}")
        if ann.entities is not None and ann.entities[i] not in ("O", ""):
            out[i].append(f"ent:{_ascii(ann.entities[i])}")


# --------------------------------------------------------------------------
# external channels


class ScoresError(ValueError):
    pass


Key = tuple  # (doc_id, sent_index)


def _iter_jsonl(path):
    text = Path(path).read_text("utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(str(e), lineno) from None


def load_external_scores(path, sentences: Sequence[Sentence] | None = None) -> dict[Key, np.ndarray]:
    """Read per-token emission scores (T x 5, tag order O,B-TERM,I-TERM,B-DEF,I-DEF)."""
    out: dict[Key, np.ndarray] = {}
    for lineno, obj in _iter_jsonl(path):
        key = (obj.get("doc_id"), obj.get("sent_index"))
        try:
            arr = np.asarray(obj["scores"], dtype=float)
        except (KeyError, ValueError, TypeError) as e:
            raise ScoresError(f"line {lineno} {key}: bad scores ({e})") from None
        if arr.size == 0:
            arr = arr.reshape(0, NUM_TAGS)
        if arr.ndim != 2 or arr.shape[1] != NUM_TAGS:
            raise ScoresError(f"{key}: scores must be rows of {NUM_TAGS} values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ScoresError(f"{key}: non-finite score")
        out[key] = arr
    if sentences is not None:
        validate_scores(out, sentences)
    return out


def validate_scores(scores: Mapping[Key, np.ndarray], sentences: Sequence[Sentence]) -> None:
    for s in sentences:
        arr = scores.get(s.key)
        if arr is not None and arr.shape[0] != len(s):
            raise ScoresError(
                f"({s.doc_id}, {s.sent_index}): {arr.shape[0]} score rows for {len(s)} tokens"
            )


def load_annotations(path) -> dict[Key, Annotation]:
    """Read ``{"doc_id","sent_index","pos","heads","entities"}`` JSONL records."""
    out = {}
    for _, obj in _iter_jsonl(path):
        key = (obj.get("doc_id"), obj.get("sent_index"))
        out[key] = Annotation(
            tuple(obj["pos"]) if obj.get("pos") is not None else None,
            tuple(int(h) for h in obj["heads"]) if obj.get("heads") is not None else None,
            tuple(obj["entities"]) if obj.get("entities") is not None else None,
        )
    return out
