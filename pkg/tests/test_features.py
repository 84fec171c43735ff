import json

import pytest

from defextract.corpus import Sentence
from defextract.features import (
    Annotation,
    FeatureExtractor,
    PatternInventory,
    ScoresError,
    coarse_pos,
    extract,
    load_annotations,
    load_external_scores,
    pattern_flags,
    word_shape,
)


def S(text, **kw):
    return Sentence.from_words(text.split(), **kw)


class TestExtract:
    def test_math_token(self):
        f = extract(S("$s^{task}$ are weights"))[0]
        assert {"pos:MATH", "shape:$", "math"} <= f

    def test_defines_cue(self):
        f = extract(S("A graph-based operator defines a transformation"))
        assert "pattern:DEFINES_CUE" in f[3]

    def test_bos_eos_sentinels(self):
        f = extract(S("alpha beta"))
        assert "w[-1]:<BOS>" in f[0] and "w[-2]:<BOS>" in f[0]
        assert "w[+1]:<EOS>" in f[1]

    def test_lexical_templates(self):
        f = extract(S("Parsing"))[0]
        assert {"w:parsing", "shape:Xx", "pre2:pa", "suf4:sing", "cap", "bias"} <= f
        assert "pre4:pa" not in f
        assert not any(x.startswith("pre2:") for x in extract(S("ab"))[0])

    def test_placeholder_and_allcaps(self):
        f = extract(S("see CITATION"))[1]
        assert {"placeholder", "allcaps"} <= f

    def test_ascii_names(self):
        for f in extract(S("naïve café … $\\alpha$")):
            assert all(name.isascii() for name in f)

    def test_deterministic(self):
        s = S("Textual entailment is the task of determining whether a hypothesis is true")
        assert extract(s) == extract(s)

    def test_position_equivariant(self):
        a = extract(S("x y the model is good here"))
        b = extract(S("q r s x y the model is good here"))
        # identical local windows (no sentence edges nearby) give identical features
        assert a[4] == b[7]

    def test_abbreviation_features(self):
        f = extract(S("word sense disambiguation ( WSD ) task"))
        assert "abbr:LONG_B" in f[0] and "abbr:LONG_I" in f[2] and "abbr:SHORT" in f[4]
        g = FeatureExtractor(use_abbreviations=False).extract(S("word sense disambiguation ( WSD ) task"))
        assert not any(x.startswith("abbr:") for fs in g for x in fs)

    def test_annotation_channel(self):
        ann = Annotation(pos=("NN", "VBZ"), heads=(1, -1), entities=("ORG", "O"))
        f = extract(S("ELMo works"), annotation=ann)
        assert {"xpos:NN", "dep:dir=R", "dep:headpos=VBZ", "ent:ORG"} <= f[0]
        assert "dep:root" in f[1]
        with pytest.raises(ValueError):
            extract(S("one"), annotation=ann)


class TestPatternFlags:
    def test_copula(self):
        flags = pattern_flags(S("Textual entailment is the task of determining"))
        assert "COPULA_CUE" in flags[2]
        assert "COPULA_CUE@+1" in flags[1] and "COPULA_CUE@-2" in flags[4]

    def test_no_cue(self):
        assert pattern_flags(S("we ran experiments on three datasets")) == [set()] * 6

    def test_acronym_groups(self):
        flags = pattern_flags(S("word sense disambiguation ( WSD )"))
        assert "ACRO_OPEN" in flags[3] and "ACRO_SHORT" in flags[4] and "ACRO_CLOSE" in flags[5]

    def test_multiword_cues(self):
        flags = pattern_flags(S("x is defined as y , z refers to w , also called v"))
        assert "DEFINED_AS_CUE" in flags[1] and "DEFINED_AS_CUE" in flags[3]
        assert "REFERS_TO_CUE" in flags[7]
        assert "CALLED_CUE" in flags[12]

    def test_custom_inventory(self, tmp_path):
        p = tmp_path / "p.tsv"
        p.write_text("# version: 2\nMEANS_CUE\tmeans\n")
        inv = PatternInventory.load(p)
        assert inv.version == "2"
        assert "MEANS_CUE" in pattern_flags(S("x means y"), inv)[1]
        assert PatternInventory.parse(inv.to_text()) == inv


def test_coarse_pos_and_shape():
    assert coarse_pos("the") == "DET"
    assert coarse_pos("of") == "PREP"
    assert coarse_pos(",") == "PUNCT"
    assert coarse_pos("42") == "NUM"
    assert coarse_pos("$x$") == "MATH"
    assert coarse_pos("quickly") == "ADV"
    assert word_shape("BiLM-2") == "XxX-d"
    assert word_shape("$x$") == "$"


class TestExternalScores:
    def write(self, tmp_path, rows):
        p = tmp_path / "s.jsonl"
        p.write_text("".join(json.dumps(r) + "\n" for r in rows))
        return p

    def test_load_and_validate(self, tmp_path):
        s = Sentence.from_words(["a", "b"], doc_id="d", sent_index=0)
        p = self.write(tmp_path, [{"doc_id": "d", "sent_index": 0, "scores": [[0] * 5, [1] * 5]}])
        out = load_external_scores(p, [s])
        assert out[("d", 0)].shape == (2, 5)

    def test_row_count_mismatch_names_sentence(self, tmp_path):
        s = Sentence.from_words(["a", "b"], doc_id="d", sent_index=3)
        p = self.write(tmp_path, [{"doc_id": "d", "sent_index": 3, "scores": [[0] * 5]}])
        with pytest.raises(ScoresError, match=r"\(d, 3\)"):
            load_external_scores(p, [s])

    def test_non_finite(self, tmp_path):
        p = tmp_path / "s.jsonl"
        p.write_text('{"doc_id": "d", "sent_index": 0, "scores": [[0, 0, NaN, 0, 0]]}\n')
        with pytest.raises(ScoresError):
            load_external_scores(p)

    def test_wrong_width(self, tmp_path):
        p = self.write(tmp_path, [{"doc_id": "d", "sent_index": 0, "scores": [[0, 0]]}])
        with pytest.raises(ScoresError):
            load_external_scores(p)


def test_load_annotations(tmp_path):
    p = tmp_path / "a.jsonl"
    p.write_text('{"doc_id": "d", "sent_index": 1, "pos": ["NN"], "heads": [-1]}\n')
    ann = load_annotations(p)[("d", 1)]
    assert ann.pos == ("NN",) and ann.heads == (-1,) and ann.entities is None
