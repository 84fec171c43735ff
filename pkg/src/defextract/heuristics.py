"""Rule-based clean-up of raw slot-tag predictions.

``postprocess`` runs three rules in a fixed order:

1. ``repair_bio``: orphan ``I-X`` tags become ``B-X``.
2. ``stitch``: same-kind spans separated only by a short run of ``O`` tokens
   (or directly adjacent) are merged into one span.
3. ``consistency_filter``: a sentence with a term but no definition, or a
   definition but no term, is cleared to all ``O`` and marked
   non-definitional.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

from .corpus import SlotTag, Span, is_valid_bio, repair_bio_positions, spans_to_tags, tags_to_spans


@dataclass(frozen=True)
class HeuristicsConfig:
    max_gap: int | None = 3  # None means unbounded
    enable_repair: bool = True
    enable_stitch: bool = True
    enable_filter: bool = True

    def __post_init__(self):
        if self.max_gap is not None and self.max_gap < 0:
            raise ValueError("max_gap must be >= 0 or None")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HeuristicsConfig":
        known = {k: d[k] for k in ("max_gap", "enable_repair", "enable_stitch", "enable_filter") if k in d}
        return cls(**known)


@dataclass(frozen=True)
class SentencePrediction:
    tags: tuple[SlotTag, ...]
    is_definitional: bool
    spans: tuple[Span, ...] = field(default=(), compare=False)

    @classmethod
    def from_tags(cls, tags: Sequence[SlotTag]) -> "SentencePrediction":
        tags = tuple(SlotTag(t) for t in tags)
        spans = tuple(tags_to_spans(tags))
        return cls(tags, has_both_kinds(spans), spans)

    @property
    def term_spans(self) -> list[Span]:
        return [s for s in self.spans if s.kind == "TERM"]

    @property
    def def_spans(self) -> list[Span]:
        return [s for s in self.spans if s.kind == "DEF"]


def has_both_kinds(spans) -> bool:
    kinds = {s.kind for s in spans}
    return "TERM" in kinds and "DEF" in kinds


def repair_bio(tags: Sequence[SlotTag]) -> list[SlotTag]:
    return repair_bio_positions(tags)[0]


def stitch(tags: Sequence[SlotTag], max_gap: int | None = 3) -> list[SlotTag]:
    """Merge consecutive same-kind spans whose gap is ``max_gap`` O tokens or fewer.

    Adjacent spans (gap 0) are merged too. ``max_gap=None`` merges across any
    run of O tokens, the unbounded form of the rule.
    """
    tags = [SlotTag(t) for t in tags]
    spans = tags_to_spans(tags)
    changed = True
    while changed:
        changed = False
        merged: list[Span] = []
        for sp in spans:
            if merged:
                prev = merged[-1]
                gap = sp.start - prev.end
                if prev.kind == sp.kind and (max_gap is None or gap <= max_gap):
                    merged[-1] = Span(sp.kind, prev.start, sp.end)
                    changed = True
                    continue
            merged.append(sp)
        spans = merged
    return spans_to_tags(spans, len(tags))


def consistency_filter(pred: SentencePrediction) -> SentencePrediction:
    if not is_valid_bio(pred.tags):
        raise ValueError("consistency_filter needs valid BIO tags")
    spans = tuple(tags_to_spans(pred.tags))
    if has_both_kinds(spans):
        return SentencePrediction(pred.tags, True, spans)
    return SentencePrediction((SlotTag.O,) * len(pred.tags), False, ())


def postprocess(tags: Sequence[SlotTag], config: HeuristicsConfig | None = None) -> SentencePrediction:
    config = config or HeuristicsConfig()
    tags = [SlotTag(t) for t in tags]
    if config.enable_repair or not is_valid_bio(tags):
        # the later rules need valid BIO, so repair is forced on invalid input
        tags = repair_bio(tags)
    if config.enable_stitch:
        tags = stitch(tags, config.max_gap)
    pred = SentencePrediction.from_tags(tags)
    if config.enable_filter:
        pred = consistency_filter(pred)
    return pred
