"""Inter-annotator agreement: Krippendorff's alpha over set-valued annotations.

Each unit (a sentence) receives from each annotator one set of token
indices per span kind. Set values are compared with the MASI distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Mapping

from .corpus import SlotTag, repair_bio_positions, tags_to_spans


def masi_distance(a, b) -> float:
    """``1 - jaccard * monotonicity`` for two sets (0 when equal)."""
    a, b = frozenset(a), frozenset(b)
    if a == b:
        return 0.0
    union = len(a | b)
    inter = len(a & b)
    jaccard = inter / union
    if a <= b or b <= a:
        m = 2 / 3
    elif inter:
        m = 1 / 3
    else:
        m = 0.0
    return 1.0 - jaccard * m


@dataclass(frozen=True)
class UnitAnnotation:
    term: frozenset[int]
    def_: frozenset[int]

    def get(self, kind: str) -> frozenset[int]:
        kind = kind.upper()
        if kind == "TERM":
            return self.term
        if kind == "DEF":
            return self.def_
        raise ValueError(f"unknown kind {kind!r}")


# unit id -> annotator -> annotation
AgreementInput = Mapping[Hashable, Mapping[Hashable, UnitAnnotation]]


def krippendorff_alpha(
    units: AgreementInput,
    kind: str,
    distance: Callable[[frozenset, frozenset], float] = masi_distance,
) -> float:
    """Krippendorff's alpha with pairable values only.

    ``D_o`` averages within-unit disagreement, each unit weighted by its
    number of values ``m_u`` and normalised by ``m_u - 1``; ``D_e`` averages
    the distance over all ordered pairs of pairable values in the data.
    """
    values_by_unit = []
    for uid in units:
        vals = [ann.get(kind) for _, ann in sorted(units[uid].items(), key=lambda kv: str(kv[0]))]
        if len(vals) >= 2:
            values_by_unit.append(vals)
    if not values_by_unit:
        raise ValueError("need at least one unit annotated by two or more annotators")

    n = sum(len(v) for v in values_by_unit)
    d_o = 0.0
    for vals in values_by_unit:
        m = len(vals)
        s = sum(distance(vals[i], vals[j]) for i in range(m) for j in range(m) if i != j)
        d_o += s / (m - 1)
    d_o /= n

    # distinct values with multiplicities keep D_e at O(distinct^2)
    counts: dict[frozenset, int] = {}
    for vals in values_by_unit:
        for v in vals:
            counts[v] = counts.get(v, 0) + 1
    distinct = sorted(counts, key=sorted)
    d_e = 0.0
    for i, a in enumerate(distinct):
        for b in distinct[i + 1:]:
            d_e += 2 * counts[a] * counts[b] * distance(a, b)
    d_e /= n * (n - 1)

    if d_e == 0.0:
        # every pairable value is identical, so D_o is zero as well
        return 1.0
    return 1.0 - d_o / d_e


def annotation_from_tags(tags) -> UnitAnnotation:
    fixed, _ = repair_bio_positions([SlotTag(t) for t in tags])
    term, def_ = set(), set()
    for sp in tags_to_spans(fixed):
        (term if sp.kind == "TERM" else def_).update(sp.indices())
    return UnitAnnotation(frozenset(term), frozenset(def_))


def load_annotations(path) -> dict:
    """Read agreement JSONL.

    Each line is ``{"unit", "annotator", "term": [...], "def": [...]}`` or
    carries ``"tags"`` instead of the index lists. A unit may also be given
    as ``"doc_id"`` plus ``"sent_index"``.
    """
    units: dict = {}
    text = Path(path).read_text("utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        uid = obj["unit"] if "unit" in obj else f"{obj.get('doc_id')}#{obj.get('sent_index')}"
        if "tags" in obj:
            ann = annotation_from_tags(obj["tags"])
        else:
            ann = UnitAnnotation(frozenset(obj.get("term", ())), frozenset(obj.get("def", ())))
        n = obj.get("length")
        if n is not None and any(i < 0 or i >= n for i in ann.term | ann.def_):
            raise ValueError(f"line {lineno}: token index out of range for length {n}")
        units.setdefault(uid, {})[obj["annotator"]] = ann
    return units
