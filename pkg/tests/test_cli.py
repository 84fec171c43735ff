import json

import pytest

from defextract.cli import CONFIG_ENV, main
from defextract.corpus import parse_conll, read_jsonl, write_conll
from defextract.synthetic import generate_cue_corpus


@pytest.fixture
def data(tmp_path):
    p = tmp_path / "w00.conll"
    p.write_text(write_conll(generate_cue_corpus(40, seed=5)))
    return p


@pytest.fixture
def model(tmp_path, data):
    p = tmp_path / "m.json"
    assert main(["train", "--data", str(data), "--epochs", "5", "--seed", "7", "--model", str(p)]) == 0
    return p


def read_json(p):
    return json.loads(p.read_text())


def test_train_writes_model_with_provenance(model):
    d = read_json(model)
    assert d["config"]["epochs"] == 5 and d["config"]["seed"] == 7
    run = d["metadata"]["run_config"]
    assert run["command"] == "train" and run["train"]["epochs"] == 5
    log = read_json(model.with_name(model.name + ".log.json"))
    assert len(log["nll_trace"]) == 5


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path / "nope.conll"), "--model", str(tmp_path / "m.json")]) == 2
    assert "not found" in capsys.readouterr().err


def test_zero_epochs_is_a_validation_error(tmp_path, data, capsys):
    assert main(["train", "--data", str(data), "--epochs", "0", "--model", str(tmp_path / "m.json")]) == 2
    assert "epochs" in capsys.readouterr().err
    assert not (tmp_path / "m.json").exists()


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["train", "--bogus"])
    assert e.value.code == 2


def test_runtime_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.conll"
    bad.write_text("a\tB-NOPE\n")
    assert main(["train", "--data", str(bad), "--model", str(tmp_path / "m.json")]) == 1
    assert "line 1" in capsys.readouterr().err


def test_eval_report(tmp_path, data, model):
    out = tmp_path / "r.json"
    assert main(["eval", "--data", str(data), "--model", str(model), "-o", str(out)]) == 0
    r = read_json(out)
    assert set(r) == {"run_config", "report", "raw_report", "notes"}
    assert 0 <= r["report"]["macro"]["f1"] <= 1
    assert r["run_config"]["heuristics"]["max_gap"] == 3


def test_eval_table(data, model, capsys):
    assert main(["eval", "--data", str(data), "--model", str(model), "--table", "--raw"]) == 0
    assert "Macro P/R/F" in capsys.readouterr().out


def test_crossval_byte_identical(tmp_path, data):
    args = ["crossval", "--data", str(data), "--folds", "4", "--seed", "1", "--epochs", "2"]
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    assert main(args + ["--jobs", "1", "-o", str(a)]) == 0
    assert main(args + ["--jobs", "1", "-o", str(b)]) == 0
    assert main(args + ["--jobs", "3", "-o", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    r = read_json(a)
    assert len(r["folds"]) == 4 and r["run_config"]["params"]["folds"] == 4
    assert "jobs" not in r["run_config"]["params"]


def test_crossval_bad_folds(data):
    assert main(["crossval", "--data", str(data), "--folds", "1"]) == 2


def test_crossval_saves_fold_models(tmp_path, data):
    d = tmp_path / "models"
    assert main(["crossval", "--data", str(data), "--folds", "2", "--epochs", "1", "--save-models", str(d), "-o", str(tmp_path / "r.json")]) == 0
    assert sorted(p.name for p in d.iterdir()) == ["fold0.json", "fold1.json"]


def test_predict_formats(tmp_path, data, model):
    out = tmp_path / "p.conll"
    assert main(["predict", "--data", str(data), "--model", str(model), "--format", "conll", "-o", str(out)]) == 0
    ds, _ = parse_conll(out.read_text())
    assert len(ds) == 40
    assert read_json(tmp_path / "p.conll.run.json")["run_config"]["command"] == "predict"
    doc = tmp_path / "doc.tex"
    doc.write_text("Textual entailment is the task of determining whether a claim is true. We use it.")
    out2 = tmp_path / "p.jsonl"
    assert main(["predict", "--data", str(doc), "--model", str(model), "-o", str(out2)]) == 0
    sents = read_jsonl(out2.read_text())
    assert [s.key for s in sents] == [("doc", 0), ("doc", 1)]


def test_scan_with_ensemble(tmp_path, model):
    docs = tmp_path / "docs"
    docs.mkdir()
    (docs / "a.txt").write_text("Textual entailment is the task of determining whether a claim is true. We train it.")
    (docs / "b.tex").write_text("We cite \\cite{x}. A biLM refers to a bidirectional language model.")
    out = tmp_path / "rec.jsonl"
    args = ["scan", "--docs", str(docs), "--model", str(model), "--ensemble", str(model), str(model), "-o", str(out), "--emit-negatives"]
    assert main(args) == 0
    stats = read_json(tmp_path / "rec.jsonl.stats.json")
    assert stats["stats"]["documents"] == 2 and stats["stats"]["sentences"] == 4
    records = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(records) == stats["stats"]["definitional"]
    assert all(r["is_ensemble"] for r in records)
    assert len(stats["stats"]["negatives"]) == 4 - len(records)


def test_scan_docs_jsonl_and_analyze(tmp_path, model):
    docs = tmp_path / "docs.jsonl"
    docs.write_text(json.dumps({"doc_id": "d", "body": "Textual entailment is the task of determining whether a claim is true."}) + "\n")
    out = tmp_path / "rec.jsonl"
    assert main(["scan", "--docs", str(docs), "--model", str(model), "-o", str(out)]) == 0
    gold = tmp_path / "gold.jsonl"
    words = "Textual entailment is the task of determining whether a claim is true .".split()
    tags = ["B-TERM", "I-TERM", "O"] + ["B-DEF"] + ["I-DEF"] * 8 + ["O"]
    gold.write_text(json.dumps({"doc_id": "d", "sent_index": 0, "tokens": words, "tags": tags}) + "\n")
    rep = tmp_path / "an.json"
    assert main(["analyze", "--records", str(out), "--gold", str(gold), "-o", str(rep)]) == 0
    analysis = read_json(rep)["analysis"]
    assert abs(sum(analysis["term_boundaries"].values()) - 1) <= 1e-9


def test_agreement(tmp_path, capsys):
    p = tmp_path / "a.jsonl"
    rows = [
        {"unit": 1, "annotator": "a", "term": [0, 1]},
        {"unit": 1, "annotator": "b", "term": [0, 1]},
        {"unit": 2, "annotator": "a", "term": [2]},
        {"unit": 2, "annotator": "b", "term": [3]},
    ]
    p.write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert main(["agreement", "--annotations", str(p), "--kind", "term"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["alpha"]["TERM"] - 0.4) <= 1e-9


def test_preprocess(tmp_path, capsys):
    doc = tmp_path / "x.txt"
    doc.write_text("See Eq. 3 for details. Next \\cite{a} here.")
    assert main(["preprocess", "--docs", str(doc)]) == 0
    sents = read_jsonl(capsys.readouterr().out)
    assert [s.words[-2] for s in sents] == ["details", "here"]


class TestConfig:
    def test_config_file_supplies_defaults(self, tmp_path, data):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 3, "train": {"data": str(data), "l2": 0.5}}))
        m = tmp_path / "m.json"
        assert main(["train", "--config", str(cfg), "--model", str(m)]) == 0
        c = read_json(m)["config"]
        assert c["epochs"] == 3 and c["l2"] == 0.5

    def test_flags_win(self, tmp_path, data, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 3, "data": str(data)}))
        monkeypatch.setenv(CONFIG_ENV, str(cfg))
        m = tmp_path / "m.json"
        assert main(["train", "--model", str(m), "--epochs", "2"]) == 0
        assert read_json(m)["config"]["epochs"] == 2

    def test_unknown_key(self, tmp_path, data):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epoch": 3}))
        assert main(["train", "--config", str(cfg), "--data", str(data), "--model", str(tmp_path / "m")]) == 2

    def test_missing_config(self, tmp_path, data):
        assert main(["train", "--config", str(tmp_path / "none.json"), "--data", str(data), "--model", "m"]) == 2
