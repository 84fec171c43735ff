"""Tag-level, span-level and sentence-level scores plus error taxonomies."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .corpus import KINDS, TAGS, SlotTag, Span, repair_bio_positions, tags_to_spans
from .heuristics import HeuristicsConfig, SentencePrediction, postprocess
from .preprocess import is_placeholder

SCORED_TAGS = (SlotTag.B_TERM, SlotTag.I_TERM, SlotTag.B_DEF, SlotTag.I_DEF)
KIND_TAGS = {
    "TERM": (SlotTag.B_TERM, SlotTag.I_TERM),
    "DEF": (SlotTag.B_DEF, SlotTag.I_DEF),
}


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, p: float, r: float) -> "PRF":
        return cls(p, r, 0.0 if p + r == 0 else 2 * p * r / (p + r))

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gold: int) -> "PRF":
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        return cls.from_pr(p, r)

    @classmethod
    def mean(cls, items: Sequence["PRF"]) -> "PRF":
        n = len(items)
        return cls(
            sum(x.precision for x in items) / n,
            sum(x.recall for x in items) / n,
            sum(x.f1 for x in items) / n,
        )


ZERO = PRF(0.0, 0.0, 0.0)

# attached to JSON reports so readers know which conventions were used
METRIC_NOTES = {
    "macro": "unweighted mean of per-class precision, recall and F1 over B-TERM, I-TERM, B-DEF, I-DEF "
    "(O excluded); the alternative of pooling B/I within each kind first is reported as term/def",
    "absent_classes": "classes with no gold and no predicted tokens; they score 0 in the macro mean",
    "partial": "a predicted span is correct if greedy max-overlap matching pairs it with a gold span "
    "of the same kind sharing at least one token",
    "classification_accuracy": "sentence decision after post-processing (both span kinds present)",
}


@dataclass(frozen=True)
class EvalReport:
    macro: PRF
    term: PRF
    def_: PRF
    partial_f: float
    classification_accuracy: float
    per_class: dict[str, PRF] = field(default_factory=dict)
    support: dict[str, int] = field(default_factory=dict)
    predicted: dict[str, int] = field(default_factory=dict)
    absent_classes: tuple[str, ...] = ()
    partial: dict[str, PRF] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["absent_classes"] = list(self.absent_classes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        def prf(x):
            return PRF(x["precision"], x["recall"], x["f1"])

        return cls(
            prf(d["macro"]),
            prf(d["term"]),
            prf(d["def_"]),
            d["partial_f"],
            d["classification_accuracy"],
            {k: prf(v) for k, v in d.get("per_class", {}).items()},
            dict(d.get("support", {})),
            dict(d.get("predicted", {})),
            tuple(d.get("absent_classes", ())),
            {k: prf(v) for k, v in d.get("partial", {}).items()},
        )


def _check_aligned(gold, pred):
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {i}: {len(g)} gold tags vs {len(p)} predicted")


def tag_metrics(gold: Sequence[Sequence[SlotTag]], pred: Sequence[Sequence[SlotTag]]) -> dict:
    """Token-level scores over the four non-O tags.

    Returns per-class PRF, the macro mean (precision, recall and F1 each
    averaged over classes) and micro-pooled TERM and DEF scores. Classes with
    neither gold nor predicted tokens score zero and are listed as absent.
    """
    _check_aligned(gold, pred)
    tp, n_pred, n_gold = Counter(), Counter(), Counter()
    for g_seq, p_seq in zip(gold, pred):
        for g, p in zip(g_seq, p_seq):
            g, p = SlotTag(g), SlotTag(p)
            n_gold[g] += 1
            n_pred[p] += 1
            if g == p:
                tp[g] += 1
    per_class = {t.value: PRF.from_counts(tp[t], n_pred[t], n_gold[t]) for t in SCORED_TAGS}
    absent = tuple(t.value for t in SCORED_TAGS if n_gold[t] == 0 and n_pred[t] == 0)
    kinds = {}
    for kind, ts in KIND_TAGS.items():
        kinds[kind] = PRF.from_counts(
            sum(tp[t] for t in ts), sum(n_pred[t] for t in ts), sum(n_gold[t] for t in ts)
        )
    return {
        "macro": PRF.mean(list(per_class.values())),
        "term": kinds["TERM"],
        "def": kinds["DEF"],
        "per_class": per_class,
        "support": {t.value: n_gold[t] for t in SCORED_TAGS},
        "predicted": {t.value: n_pred[t] for t in SCORED_TAGS},
        "absent_classes": absent,
    }


def spans_of(tags: Sequence[SlotTag]) -> list[Span]:
    """Spans of a possibly invalid tag sequence (orphan I- opens a span)."""
    return tags_to_spans(repair_bio_positions(tags)[0])


def greedy_overlap_matching(gold: Sequence[Span], pred: Sequence[Span]) -> list[tuple[int, int]]:
    """Pair gold and predicted spans by decreasing overlap (ties: leftmost gold).

    Only pairs overlapping by at least one token are considered. Returns
    ``(gold_index, pred_index)`` pairs.
    """
    cands = []
    for gi, g in enumerate(gold):
        for pi, p in enumerate(pred):
            ov = g.overlap(p)
            if ov >= 1:
                cands.append((-ov, g.start, p.start, gi, pi))
    cands.sort()
    used_g, used_p, pairs = set(), set(), []
    for _, _, _, gi, pi in cands:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        pairs.append((gi, pi))
    return pairs


def _span_counts(gold_spans, pred_spans, exact: bool):
    counts = {k: [0, 0, 0] for k in KINDS}  # tp, pred, gold
    if len(gold_spans) != len(pred_spans):
        raise ValueError("gold and predicted span lists differ in sentence count")
    for gs, ps in zip(gold_spans, pred_spans):
        for kind in KINDS:
            g = [s for s in gs if s.kind == kind]
            p = [s for s in ps if s.kind == kind]
            if exact:
                tp = len(set(g) & set(p))
            else:
                tp = len(greedy_overlap_matching(g, p))
            c = counts[kind]
            c[0] += tp
            c[1] += len(p)
            c[2] += len(g)
    out = {k: PRF.from_counts(*c) for k, c in counts.items()}
    out["pooled"] = PRF.from_counts(*(sum(c[i] for c in counts.values()) for i in range(3)))
    return out


def partial_match_f(gold_spans: Sequence[Sequence[Span]], pred_spans: Sequence[Sequence[Span]]) -> dict[str, PRF]:
    """Span PRF where a prediction counts if it overlaps its matched gold span."""
    return _span_counts(gold_spans, pred_spans, exact=False)


def exact_span_f(gold_spans, pred_spans) -> dict[str, PRF]:
    return _span_counts(gold_spans, pred_spans, exact=True)


def classification_accuracy(gold_flags: Sequence[bool], pred_flags: Sequence[bool]) -> float:
    if len(gold_flags) != len(pred_flags):
        raise ValueError("flag sequences differ in length")
    if not gold_flags:
        raise ValueError("no sentences to score")
    return sum(bool(g) == bool(p) for g, p in zip(gold_flags, pred_flags)) / len(gold_flags)


def is_definitional(tags: Sequence[SlotTag]) -> bool:
    kinds = {s.kind for s in spans_of(tags)}
    return kinds >= {"TERM", "DEF"}


def evaluate(
    gold: Sequence[Sequence[SlotTag]],
    pred: Sequence[Sequence[SlotTag]],
    pred_flags: Sequence[bool] | None = None,
) -> EvalReport:
    """Full report for one prediction set.

    ``pred_flags`` are the sentence-level decisions; by default a sentence is
    predicted definitional when its tags contain both a TERM and a DEF span.
    """
    tm = tag_metrics(gold, pred)
    partial = partial_match_f([spans_of(g) for g in gold], [spans_of(p) for p in pred])
    gold_flags = [is_definitional(g) for g in gold]
    if pred_flags is None:
        pred_flags = [is_definitional(p) for p in pred]
    return EvalReport(
        macro=tm["macro"],
        term=tm["term"],
        def_=tm["def"],
        partial_f=partial["pooled"].f1,
        classification_accuracy=classification_accuracy(gold_flags, pred_flags),
        per_class=tm["per_class"],
        support=tm["support"],
        predicted=tm["predicted"],
        absent_classes=tm["absent_classes"],
        partial=partial,
    )


def evaluate_predictions(gold, preds: Sequence[SentencePrediction]) -> EvalReport:
    return evaluate(gold, [p.tags for p in preds], [p.is_definitional for p in preds])


def mean_report(reports: Sequence[EvalReport]) -> EvalReport:
    """Arithmetic mean of every metric across reports (supports are summed)."""
    if not reports:
        raise ValueError("no reports to average")
    n = len(reports)
    classes = reports[0].per_class.keys()
    return EvalReport(
        macro=PRF.mean([r.macro for r in reports]),
        term=PRF.mean([r.term for r in reports]),
        def_=PRF.mean([r.def_ for r in reports]),
        partial_f=sum(r.partial_f for r in reports) / n,
        classification_accuracy=sum(r.classification_accuracy for r in reports) / n,
        per_class={c: PRF.mean([r.per_class[c] for r in reports]) for c in classes},
        support={c: sum(r.support.get(c, 0) for r in reports) for c in classes},
        predicted={c: sum(r.predicted.get(c, 0) for r in reports) for c in classes},
        absent_classes=tuple(sorted({c for r in reports for c in r.absent_classes})),
        partial={k: PRF.mean([r.partial[k] for r in reports]) for k in reports[0].partial},
    )


def format_table(rows: dict[str, EvalReport]) -> str:
    """Plain-text table with Macro/TERM/DEF P/R/F, Partial F and Clsf. columns (percent)."""

    def prf(x: PRF) -> str:
        return f"{100 * x.precision:5.1f} / {100 * x.recall:5.1f} / {100 * x.f1:5.1f}"

    name_w = max([len(k) for k in rows] + [5])
    head = f"{'':{name_w}}  {'Macro P/R/F':^21}  {'TERM P/R/F':^21}  {'DEF P/R/F':^21}  {'Partial F':>9}  {'Clsf.':>6}"
    lines = [head, "-" * len(head)]
    for name, r in rows.items():
        lines.append(
            f"{name:{name_w}}  {prf(r.macro)}  {prf(r.term)}  {prf(r.def_)}  "
            f"{100 * r.partial_f:9.1f}  {100 * r.classification_accuracy:6.1f}"
        )
    return "\n".join(lines) + "\n"


def dumps_report(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# ensembling


def ensemble_vote(predictions: Sequence[Sequence[SlotTag]]) -> list[SlotTag]:
    """Per-token plurality vote; ties prefer O, then the lowest tag index."""
    if not predictions:
        raise ValueError("need at least one prediction")
    n = len(predictions[0])
    if any(len(p) != n for p in predictions):
        raise ValueError("predictions differ in length")
    out = []
    for t in range(n):
        counts = Counter(SlotTag(p[t]) for p in predictions)
        top = max(counts.values())
        winners = [tag for tag in TAGS if counts.get(tag, 0) == top]
        out.append(SlotTag.O if SlotTag.O in winners else winners[0])
    return out


def ensemble_predict(predictions, config: HeuristicsConfig | None = None) -> SentencePrediction:
    return postprocess(ensemble_vote(predictions), config)


# --------------------------------------------------------------------------
# taxonomies


class Edge(str, enum.Enum):
    EXACT = "exact"
    TOO_LONG = "too_long"
    CUT_OFF = "cut_off"


BOUNDARY_SUMMARIES = (
    "correct",
    "too_long_left",
    "too_long_right",
    "cut_off_left",
    "cut_off_right",
    "mixed",
    "spurious",
)


@dataclass(frozen=True)
class BoundaryCategory:
    left: Edge | None
    right: Edge | None
    summary: str


def boundary_category(pred: Span, gold_spans: Iterable[Span]) -> BoundaryCategory:
    same = [g for g in gold_spans if g.kind == pred.kind and g.overlap(pred) >= 1]
    if not same:
        return BoundaryCategory(None, None, "spurious")
    g = min(same, key=lambda s: (-s.overlap(pred), s.start))
    left = Edge.EXACT if pred.start == g.start else Edge.TOO_LONG if pred.start < g.start else Edge.CUT_OFF
    right = Edge.EXACT if pred.end == g.end else Edge.TOO_LONG if pred.end > g.end else Edge.CUT_OFF
    if left is Edge.EXACT and right is Edge.EXACT:
        summary = "correct"
    elif left is Edge.EXACT:
        summary = f"{right.value}_right"
    elif right is Edge.EXACT:
        summary = f"{left.value}_left"
    else:
        summary = "mixed"
    return BoundaryCategory(left, right, summary)


class TermType(str, enum.Enum):
    TEXTUAL = "TEXTUAL"
    ACRONYM = "ACRONYM"
    ACRONYM_TEXT = "ACRONYM_TEXT"
    SYMBOL = "SYMBOL"
    SYMBOL_TEXT = "SYMBOL_TEXT"


def _is_symbol(tok: str) -> bool:
    return tok.startswith("$") or tok == "EQUATION"


def _is_acronym(tok: str, short_forms) -> bool:
    if tok in short_forms:
        return True
    letters = [c for c in tok if c.isalpha()]
    return 2 <= len(tok) <= 6 and bool(letters) and all(c.isupper() for c in letters) and not is_placeholder(tok)


def _is_word(tok: str) -> bool:
    return any(c.isalnum() for c in tok)


def term_type(tokens: Sequence[str], short_forms: Iterable[str] = ()) -> TermType:
    """Classify a term span as textual, acronym, math symbol or a mix.

    Punctuation-only tokens are ignored when deciding between the pure and
    mixed categories.
    """
    if not tokens:
        raise ValueError("empty term span")
    short_forms = set(short_forms)
    words = [t for t in tokens if _is_word(t) or _is_symbol(t)] or list(tokens)
    sym = [_is_symbol(t) for t in words]
    if any(sym):
        return TermType.SYMBOL if all(sym) else TermType.SYMBOL_TEXT
    acro = [_is_acronym(t, short_forms) for t in words]
    if all(acro):
        return TermType.ACRONYM
    if any(acro):
        return TermType.ACRONYM_TEXT
    return TermType.TEXTUAL
