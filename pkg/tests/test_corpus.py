import json
import random

import pytest
from hypothesis import given, strategies as st

from defextract.corpus import (
    TAGS,
    Dataset,
    ParseError,
    Sentence,
    SlotTag,
    Span,
    Token,
    is_valid_bio,
    load_dataset,
    parse_conll,
    read_jsonl,
    repair_bio_positions,
    spans_to_tags,
    split_folds,
    tags_to_spans,
    write_conll,
    write_jsonl,
)

B_T, I_T, B_D, I_D, O = SlotTag.B_TERM, SlotTag.I_TERM, SlotTag.B_DEF, SlotTag.I_DEF, SlotTag.O


def valid_tags():
    return st.lists(st.sampled_from(TAGS), max_size=25).map(lambda t: repair_bio_positions(t)[0])


def _dataset(n=3, seed=0):
    rng = random.Random(seed)
    sents = []
    for i in range(n):
        words = [rng.choice(["alpha", "beta", "$x_1$", "(", "CITATION", "is"]) for _ in range(rng.randint(1, 8))]
        tags = repair_bio_positions([rng.choice(TAGS) for _ in words])[0]
        sents.append(Sentence.from_words(words, tags, None, i))
    return Dataset(tuple(sents), "toy")


class TestSlotTag:
    def test_five_values_in_index_order(self):
        assert [t.value for t in TAGS] == ["O", "B-TERM", "I-TERM", "B-DEF", "I-DEF"]
        assert [t.index for t in TAGS] == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("tag", TAGS)
    def test_serialization_round_trip(self, tag):
        assert SlotTag.parse(tag.value) is tag

    def test_unknown(self):
        with pytest.raises(ValueError):
            SlotTag.parse("B-FOO")


class TestParseConll:
    def test_textual_entailment_fixture(self):
        ds, warnings = parse_conll("Textual\tB-TERM\nentailment\tI-TERM\nis\tO\n")
        assert len(ds) == 1 and len(ds[0]) == 3
        assert tags_to_spans(ds[0].gold_tags) == [Span("TERM", 0, 2)]
        assert warnings == []

    def test_empty_input(self):
        with pytest.raises(ParseError, match="empty"):
            parse_conll("")

    def test_orphan_inside_repaired_with_one_warning(self):
        ds, warnings = parse_conll("defines\tI-DEF\nthings\tI-DEF\n")
        assert ds[0].gold_tags == (B_D, I_D)
        assert len(warnings) == 1

    def test_unknown_tag_names_line(self):
        with pytest.raises(ParseError) as e:
            parse_conll("a\tO\n\nb\tO\nc\tB-XYZ\n")
        assert e.value.line == 4

    def test_missing_tab(self):
        with pytest.raises(ParseError):
            parse_conll("a O\n")

    def test_extra_columns_ignored_with_warning(self):
        ds, warnings = parse_conll("a\tO\tNN\nb\tB-TERM\tNN\n")
        assert ds[0].words == ["a", "b"]
        assert len(warnings) == 2

    def test_sentence_order_and_indices(self):
        ds, _ = parse_conll("a\tO\n\n\nb\tO\n\nc\tO\n")
        assert [s.words for s in ds] == [["a"], ["b"], ["c"]]
        assert [s.sent_index for s in ds] == [0, 1, 2]


class TestWriteConll:
    def test_single_trailing_newline(self):
        text = write_conll(_dataset(1))
        assert text.endswith("\n") and not text.endswith("\n\n")

    def test_round_trip(self):
        ds = _dataset(3)
        back, warnings = parse_conll(write_conll(ds), "toy")
        assert back == ds
        assert warnings == []

    def test_unlabeled_rejected(self):
        with pytest.raises(ValueError):
            write_conll([Sentence.from_words(["a"])])

    def test_tab_in_token_rejected(self):
        with pytest.raises(ValueError):
            Token("a\tb", 0)

    @given(st.integers(0, 10_000))
    def test_round_trip_property(self, seed):
        ds = _dataset(4, seed)
        assert parse_conll(write_conll(ds), "toy") == (ds, [])


class TestSpans:
    def test_direct_reading(self):
        assert tags_to_spans([B_T, I_T, O, B_D]) == [Span("TERM", 0, 2), Span("DEF", 3, 4)]

    def test_all_o(self):
        assert tags_to_spans([O, O, O]) == []

    def test_adjacent_begins_are_two_spans(self):
        assert tags_to_spans([B_D, B_D]) == [Span("DEF", 0, 1), Span("DEF", 1, 2)]

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            tags_to_spans([O, I_T])

    @given(valid_tags())
    def test_spans_to_tags_inverse(self, tags):
        assert spans_to_tags(tags_to_spans(tags), len(tags)) == tags

    @given(valid_tags())
    def test_spans_cover_exactly_non_o(self, tags):
        spans = tags_to_spans(tags)
        for kind in ("TERM", "DEF"):
            covered = sorted(i for s in spans if s.kind == kind for i in s.indices())
            assert covered == [i for i, t in enumerate(tags) if t.kind == kind]
        for a, b in zip(spans, spans[1:]):
            assert a.end <= b.start

    def test_span_bounds(self):
        with pytest.raises(ValueError):
            Span("TERM", 2, 2)
        with pytest.raises(ValueError):
            Span("NOPE", 0, 1)


class TestSentence:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Sentence.from_words(["a", "b"], [O])

    def test_invalid_bio_rejected(self):
        with pytest.raises(ValueError):
            Sentence.from_words(["a"], [I_D])

    def test_token_index_matches_position(self):
        s = Sentence.from_words(["x", "y", "z"])
        assert [t.index for t in s.tokens] == [0, 1, 2]

    def test_whitespace_only_inside_math(self):
        Token("$a + b$", 0)
        with pytest.raises(ValueError):
            Token("a b", 0)
        with pytest.raises(ValueError):
            Token("", 0)

    def test_dataset_requires_labels(self):
        with pytest.raises(ValueError):
            Dataset((Sentence.from_words(["a"]),))


class TestFolds:
    def test_pigeonhole(self):
        assert split_folds(10, 10, 0).sizes() == [1] * 10

    def test_224_into_10(self):
        sizes = split_folds(224, 10, 3).sizes()
        assert sorted(sizes) == [22] * 6 + [23] * 4

    def test_deterministic(self):
        assert split_folds(50, 5, 9) == split_folds(50, 5, 9)
        assert split_folds(50, 5, 9) != split_folds(50, 5, 10)

    @pytest.mark.parametrize("k", [1, 11])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            split_folds(10, k, 0)

    @given(st.integers(2, 60), st.integers(0, 2**32 - 1), st.data())
    def test_partition(self, n, seed, data):
        k = data.draw(st.integers(2, n))
        a = split_folds(n, k, seed)
        folds = a.folds()
        assert sorted(i for f in folds for i in f) == list(range(n))
        assert max(a.sizes()) - min(a.sizes()) <= 1


class TestJsonl:
    def test_round_trip(self, tmp_path):
        ds = _dataset(3)
        sents = [Sentence(s.tokens, s.gold_tags, "doc", s.sent_index) for s in ds]
        text = write_jsonl(sents)
        assert read_jsonl(text) == sents
        obj = json.loads(text.splitlines()[0])
        assert set(obj) == {"doc_id", "sent_index", "tokens", "tags"}
        p = tmp_path / "d.jsonl"
        p.write_text(text)
        assert list(load_dataset(p)[0]) == sents

    def test_load_conll_path(self, tmp_path):
        p = tmp_path / "d.conll"
        p.write_text(write_conll(_dataset(2)))
        assert len(load_dataset(p)[0]) == 2


@given(st.lists(st.sampled_from(TAGS), max_size=25))
def test_repair_yields_valid_bio(tags):
    fixed, positions = repair_bio_positions(tags)
    assert is_valid_bio(fixed)
    assert all(tags[i] != fixed[i] for i in positions)
    assert sum(a != b for a, b in zip(tags, fixed)) == len(positions)
