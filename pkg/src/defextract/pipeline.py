"""Document scanning: raw text in, glossary records out."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .abbrev import detect_abbreviations
from .corpus import Sentence, Span, tags_to_spans
from .crf import CrfModel, predict_one
from .heuristics import HeuristicsConfig, postprocess
from .metrics import BOUNDARY_SUMMARIES, TermType, boundary_category, ensemble_vote, term_type
from .preprocess import RawDocument, normalize, segment


@dataclass(frozen=True)
class SpanRecord:
    start: int
    end: int
    text: str
    type: str | None = None


@dataclass(frozen=True)
class GlossaryRecord:
    doc_id: str
    sent_index: int
    sentence: str
    tokens: tuple[str, ...]
    terms: tuple[SpanRecord, ...]
    definitions: tuple[SpanRecord, ...]
    is_ensemble: bool = False

    def __post_init__(self):
        if not self.terms or not self.definitions:
            raise ValueError("a glossary record needs at least one term and one definition")

    def to_json(self) -> dict:
        d = asdict(self)
        d["tokens"] = list(self.tokens)
        for key in ("terms", "definitions"):
            d[key] = [{k: v for k, v in s.items() if v is not None} for s in d[key]]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "GlossaryRecord":
        return cls(
            d["doc_id"],
            d["sent_index"],
            d["sentence"],
            tuple(d["tokens"]),
            tuple(SpanRecord(s["start"], s["end"], s["text"], s.get("type")) for s in d["terms"]),
            tuple(SpanRecord(s["start"], s["end"], s["text"]) for s in d["definitions"]),
            d.get("is_ensemble", False),
        )


@dataclass
class ScanStats:
    documents: int = 0
    sentences: int = 0
    definitional: int = 0
    term_types: dict[str, int] = field(default_factory=lambda: {t.value: 0 for t in TermType})
    negatives: list[list] | None = None  # [doc_id, sent_index] of non-definitional sentences

    @property
    def avg_defs_per_doc(self) -> float:
        return self.definitional / self.documents if self.documents else 0.0

    def merge(self, other: "ScanStats") -> None:
        self.documents += other.documents
        self.sentences += other.sentences
        self.definitional += other.definitional
        for k, v in other.term_types.items():
            self.term_types[k] = self.term_types.get(k, 0) + v
        if other.negatives is not None:
            self.negatives = (self.negatives or []) + other.negatives

    def to_json(self) -> dict:
        d = {
            "documents": self.documents,
            "sentences": self.sentences,
            "definitional": self.definitional,
            "avg_defs_per_doc": self.avg_defs_per_doc,
            "term_types": dict(self.term_types),
        }
        if self.negatives is not None:
            d["negatives"] = self.negatives
        return d


def _record(sentence: Sentence, spans: Sequence[Span], is_ensemble: bool) -> GlossaryRecord:
    words = sentence.words
    short_forms = {p.short_form for p in detect_abbreviations(words)}
    terms, defs = [], []
    for sp in spans:
        text = " ".join(words[sp.start:sp.end])
        if sp.kind == "TERM":
            terms.append(SpanRecord(sp.start, sp.end, text, term_type(words[sp.start:sp.end], short_forms).value))
        else:
            defs.append(SpanRecord(sp.start, sp.end, text))
    return GlossaryRecord(
        sentence.doc_id, sentence.sent_index, sentence.text, tuple(words), tuple(terms), tuple(defs), is_ensemble
    )


def scan_sentences(
    sentences: Sequence[Sentence],
    models: Sequence[CrfModel],
    ext: Mapping | None = None,
    heuristics: HeuristicsConfig | None = None,
    emit_negatives: bool = False,
) -> tuple[list[GlossaryRecord], ScanStats]:
    if not models:
        raise ValueError("need at least one model")
    ext = ext or {}
    ensemble = len(models) > 1
    stats = ScanStats(sentences=len(sentences), negatives=[] if emit_negatives else None)
    records = []
    for s in sentences:
        if len(s) == 0:
            continue
        raw = [predict_one(m, m.featurize(s), ext.get(s.key)) for m in models]
        tags = ensemble_vote(raw) if ensemble else raw[0]
        pred = postprocess(tags, heuristics)
        if pred.is_definitional:
            rec = _record(s, pred.spans, ensemble)
            records.append(rec)
            for t in rec.terms:
                stats.term_types[t.type] += 1
        elif emit_negatives:
            stats.negatives.append([s.doc_id, s.sent_index])
    stats.definitional = len(records)
    return records, stats


def scan_document(
    doc: RawDocument,
    models: Sequence[CrfModel],
    ext: Mapping | None = None,
    heuristics: HeuristicsConfig | None = None,
    emit_negatives: bool = False,
    abbreviations: frozenset[str] | None = None,
) -> tuple[list[GlossaryRecord], ScanStats]:
    """Normalize, segment and tag one document; keep definitional sentences.

    With several models the per-token majority vote is post-processed
    instead of a single model's output.
    """
    sentences = segment(normalize(doc), abbreviations)
    records, stats = scan_sentences(sentences, models, ext, heuristics, emit_negatives)
    stats.documents = 1
    return records, stats


def _scan_args(args):
    return scan_document(*args)


def scan_corpus(
    docs: Sequence[RawDocument],
    models: Sequence[CrfModel],
    ext: Mapping | None = None,
    heuristics: HeuristicsConfig | None = None,
    emit_negatives: bool = False,
    jobs: int = 1,
) -> tuple[list[GlossaryRecord], ScanStats]:
    args = [(d, models, ext, heuristics, emit_negatives) for d in docs]
    if jobs > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scan_args, args))
    else:
        results = [scan_document(*a) for a in args]
    records: list[GlossaryRecord] = []
    total = ScanStats(negatives=[] if emit_negatives else None)
    for recs, st in results:
        records.extend(recs)
        total.merge(st)
    return records, total


def dumps_records(records: Iterable[GlossaryRecord]) -> str:
    return "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in records)


def loads_records(text: str) -> list[GlossaryRecord]:
    return [GlossaryRecord.from_json(json.loads(l)) for l in text.splitlines() if l.strip()]


# --------------------------------------------------------------------------
# taxonomy analysis

TERM_CATEGORY_NAMES = {
    TermType.TEXTUAL.value: "Textual term",
    "INCORRECT": "Incorrect term",
    TermType.SYMBOL.value: "Math symbol term",
    TermType.SYMBOL_TEXT.value: "Math symbol and text",
    TermType.ACRONYM.value: "Acronym",
    TermType.ACRONYM_TEXT.value: "Acronym and text",
}

DEF_CATEGORY_NAMES = {
    "TEXTUAL": "Textual Def.",
    "IMPLAUSIBLE": "Other: implausible (proxy)",
    "PLAUSIBLE": "Other: plausible (proxy)",
    "SHORT_NAME": "Short name / Synonym",
    "TEXT_FORMULA": "Textual & Formula Def.",
    "FORMULA": "Formula Def.",
}

PROXY_NOTE = (
    "Other: plausible/implausible are automatic proxies. A predicted definition that overlaps no "
    "gold DEF span is 'plausible' when the sentence has a gold DEF elsewhere and 'implausible' otherwise."
)


def _is_math(tok: str) -> bool:
    return tok.startswith("$") or tok == "EQUATION"


def def_content_type(tokens: Sequence[str]) -> str:
    words = [t for t in tokens if any(c.isalnum() for c in t) or _is_math(t)] or list(tokens)
    math = [_is_math(t) for t in words]
    if all(math):
        return "FORMULA"
    if any(math):
        return "TEXT_FORMULA"
    if len(words) <= 2:
        return "SHORT_NAME"
    return "TEXTUAL"


def _proportions(counter: Counter, keys) -> dict[str, float]:
    total = sum(counter.values())
    return {k: (counter[k] / total if total else 0.0) for k in keys}


def analyze_predictions(records: Sequence[GlossaryRecord], gold: Iterable[Sentence]) -> dict:
    """Term/definition category and boundary histograms against gold spans."""
    if not records:
        raise ValueError("no records to analyze")
    gold_by_key = {s.key: s for s in gold if s.gold_tags is not None}
    matched = [r for r in records if (r.doc_id, r.sent_index) in gold_by_key]
    if not matched:
        raise ValueError("no record matches a gold sentence (check doc_id/sent_index)")
    term_cat, def_cat = Counter(), Counter()
    term_bound, def_bound = Counter(), Counter()
    for r in matched:
        g = gold_by_key[(r.doc_id, r.sent_index)]
        if len(g) != len(r.tokens):
            raise ValueError(f"({r.doc_id}, {r.sent_index}): token count differs from gold")
        gspans = tags_to_spans(g.gold_tags)
        gterms = [s for s in gspans if s.kind == "TERM"]
        gdefs = [s for s in gspans if s.kind == "DEF"]
        short_forms = {p.short_form for p in detect_abbreviations(list(r.tokens))}
        for t in r.terms:
            sp = Span("TERM", t.start, t.end)
            term_bound[boundary_category(sp, gterms).summary] += 1
            if any(sp.overlap(x) for x in gterms):
                term_cat[term_type(r.tokens[t.start:t.end], short_forms).value] += 1
            else:
                term_cat["INCORRECT"] += 1
        for d in r.definitions:
            sp = Span("DEF", d.start, d.end)
            def_bound[boundary_category(sp, gdefs).summary] += 1
            if any(sp.overlap(x) for x in gdefs):
                def_cat[def_content_type(r.tokens[d.start:d.end])] += 1
            else:
                def_cat["PLAUSIBLE" if gdefs else "IMPLAUSIBLE"] += 1
    return {
        "records_analyzed": len(matched),
        "records_without_gold": len(records) - len(matched),
        "term_categories": _proportions(term_cat, TERM_CATEGORY_NAMES),
        "def_categories": _proportions(def_cat, DEF_CATEGORY_NAMES),
        "term_boundaries": _proportions(term_bound, BOUNDARY_SUMMARIES),
        "def_boundaries": _proportions(def_bound, BOUNDARY_SUMMARIES),
        "counts": {
            "term_categories": dict(term_cat),
            "def_categories": dict(def_cat),
            "term_boundaries": dict(term_bound),
            "def_boundaries": dict(def_bound),
        },
        "labels": {"term_categories": TERM_CATEGORY_NAMES, "def_categories": DEF_CATEGORY_NAMES},
        "proxy_note": PROXY_NOTE,
    }
