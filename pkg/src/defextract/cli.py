"""Command-line interface.

Every command accepts ``--config FILE`` (or the ``DEFEXTRACT_CONFIG``
environment variable): a JSON object whose keys are option names. Values in
a section named after the command take precedence over top-level values, and
explicit flags take precedence over both.

Exit codes: 0 success, 1 runtime error, 2 usage error or missing input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .agreement import krippendorff_alpha, load_annotations as load_agreement
from .corpus import Dataset, Sentence, load_dataset, parse_conll, read_jsonl, write_conll, write_jsonl
from .crf import TrainConfig, load_model, predict, save_model, train
from .crossval import crossval
from .features import FeatureExtractor, PatternInventory, load_annotations, load_external_scores
from .heuristics import HeuristicsConfig, postprocess
from .metrics import METRIC_NOTES, dumps_report, ensemble_vote, evaluate, evaluate_predictions, format_table
from .pipeline import analyze_predictions, dumps_records, loads_records, scan_corpus
from .preprocess import RawDocument, load_abbreviations, preprocess_document
from .synthetic import load_shipped_corpus

CONFIG_ENV = "DEFEXTRACT_CONFIG"
SHIPPED = "shipped"

# options that never enter the provenance snapshot: parallelism and output
# locations do not affect results, and leaving them out keeps reports from
# different runs byte-comparable
_NOT_PROVENANCE = {"jobs", "config", "func", "command", "out", "stats", "save_models"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    train: dict | None = None
    heuristics: dict | None = None
    version: str = __version__

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        params = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_PROVENANCE}
        tc = asdict(_train_config(args)) if hasattr(args, "epochs") else None
        hc = _heuristics(args).to_dict() if hasattr(args, "max_gap") else None
        return cls(args.command, params, tc, hc)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# argument groups


def _add_train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    g.add_argument("--lr", "--learning-rate", dest="lr", type=float, default=TrainConfig.learning_rate)
    g.add_argument("--l2", type=float, default=TrainConfig.l2)
    g.add_argument("--max-len", dest="max_len", type=int, default=TrainConfig.max_sentence_length)
    g.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    g.add_argument("--train-seed", type=int, default=None, help="defaults to --seed")
    g.add_argument("--constrained", action="store_true", help="forbid invalid BIO transitions when decoding")
    g.add_argument("--patterns", default=None, help="pattern inventory TSV (default: bundled)")
    g.add_argument("--no-abbrev", action="store_true", help="disable abbreviation features")


def _add_heuristic_flags(p):
    g = p.add_argument_group("heuristics")
    g.add_argument("--max-gap", type=int, default=3, help="stitching gap; negative means unbounded")
    g.add_argument("--no-repair", action="store_true")
    g.add_argument("--no-stitch", action="store_true")
    g.add_argument("--no-filter", action="store_true")
    g.add_argument("--raw", action="store_true", help="disable all heuristics")


def _add_out(p, help="output path (default: stdout)"):
    p.add_argument("--out", "-o", default="-", help=help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defextract", description="Term and definition extraction toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", default=None, help=f"JSON config (default: ${CONFIG_ENV})")
        p.set_defaults(func=func)
        return p

    p = command("train", cmd_train, "Train a CRF tagger.")
    p.add_argument("--data", required=True)
    p.add_argument("--model", "--out", "-o", dest="model", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ext-scores", default=None)
    p.add_argument("--annotations", default=None, help="JSONL with pos/heads/entities per sentence")
    _add_train_flags(p)

    p = command("eval", cmd_eval, "Evaluate one model (or an ensemble) on labeled data.")
    p.add_argument("--data", required=True)
    p.add_argument("--model", nargs="+", action="extend", required=True)
    p.add_argument("--ext-scores", default=None)
    p.add_argument("--annotations", default=None)
    p.add_argument("--table", action="store_true", help="print a text table instead of JSON")
    _add_heuristic_flags(p)
    _add_out(p)

    p = command("ensemble", cmd_eval, "Evaluate a majority-vote ensemble on labeled data.")
    p.add_argument("--data", required=True)
    p.add_argument("--model", "--models", dest="model", nargs="+", action="extend", required=True)
    p.add_argument("--ext-scores", default=None)
    p.add_argument("--annotations", default=None)
    p.add_argument("--table", action="store_true")
    _add_heuristic_flags(p)
    _add_out(p)

    p = command("crossval", cmd_crossval, "k-fold cross-validation.")
    p.add_argument("--data", default=SHIPPED, help=f"dataset path or '{SHIPPED}' for the bundled corpus")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--save-models", default=None, help="directory for per-fold models")
    p.add_argument("--table", action="store_true")
    _add_train_flags(p)
    _add_heuristic_flags(p)
    _add_out(p)

    p = command("predict", cmd_predict, "Tag sentences (CoNLL, JSONL) or raw documents.")
    p.add_argument("--data", required=True, help="CoNLL/JSONL sentences, or a .tex/.txt document")
    p.add_argument("--model", "--ensemble", dest="model", nargs="+", action="extend", required=True)
    p.add_argument("--ext-scores", default=None)
    p.add_argument("--annotations", default=None)
    p.add_argument("--format", choices=("conll", "jsonl"), default="jsonl")
    _add_heuristic_flags(p)
    _add_out(p)

    p = command("scan", cmd_scan, "Extract glossary records from documents.")
    p.add_argument("--docs", required=True, help="directory of documents, one document file, or docs JSONL")
    p.add_argument("--model", "--ensemble", dest="model", nargs="+", action="extend", required=True)
    p.add_argument("--ext-scores", default=None)
    p.add_argument("--emit-negatives", action="store_true")
    p.add_argument("--stats", default=None, help="stats JSON (default: <out>.stats.json, or stderr)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_heuristic_flags(p)
    _add_out(p, "records JSONL (default: stdout)")

    p = command("analyze", cmd_analyze, "Categorize scanned records against gold annotations.")
    p.add_argument("--records", required=True)
    p.add_argument("--gold", required=True)
    _add_out(p)

    p = command("agreement", cmd_agreement, "Krippendorff's alpha with MASI distance.")
    p.add_argument("--annotations", required=True)
    p.add_argument("--kind", choices=("term", "def", "both"), default="both")
    _add_out(p)

    p = command("preprocess", cmd_preprocess, "Normalize and segment documents into sentence JSONL.")
    p.add_argument("--docs", required=True)
    _add_out(p)
    return parser


# --------------------------------------------------------------------------
# helpers


def _need_file(path, what="file") -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {path}")
    return p


def _train_config(args) -> TrainConfig:
    seed = args.train_seed if args.train_seed is not None else args.seed
    return TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        l2=args.l2,
        max_sentence_length=args.max_len,
        seed=seed,
        batch_size=args.batch_size,
        constrained=args.constrained,
    )


def _heuristics(args) -> HeuristicsConfig:
    if args.raw:
        return HeuristicsConfig(args.max_gap, False, False, False)
    gap = None if args.max_gap is not None and args.max_gap < 0 else args.max_gap
    return HeuristicsConfig(gap, not args.no_repair, not args.no_stitch, not args.no_filter)


def _extractor(args) -> FeatureExtractor:
    inv = PatternInventory.load(_need_file(args.patterns, "pattern file")) if args.patterns else PatternInventory.default()
    return FeatureExtractor(inv, not args.no_abbrev)


def _dataset(path) -> Dataset:
    if path == SHIPPED:
        return load_shipped_corpus()
    ds, warnings = load_dataset(_need_file(path, "dataset"))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return ds


def _sentences(path) -> list[Sentence]:
    """Labeled or unlabeled sentences; raw documents are preprocessed."""
    p = _need_file(path, "input")
    text = p.read_text("utf-8")
    if p.suffix == ".jsonl":
        return read_jsonl(text)
    if p.suffix in (".tex", ".txt"):
        return preprocess_document(RawDocument(p.stem, text))
    return list(parse_conll(text, p.stem)[0])


def _read_docs(path) -> list[RawDocument]:
    p = _need_file(path, "documents")
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.is_file() and not f.name.startswith("."))
        return [RawDocument(f.stem, f.read_text("utf-8")) for f in files]
    if p.suffix == ".jsonl":
        docs = []
        for line in p.read_text("utf-8").splitlines():
            if line.strip():
                obj = json.loads(line)
                docs.append(RawDocument(str(obj["doc_id"]), obj["body"]))
        return docs
    return [RawDocument(p.stem, p.read_text("utf-8"))]


def _ext(args, sentences=None):
    if getattr(args, "ext_scores", None):
        return load_external_scores(_need_file(args.ext_scores, "scores file"), sentences)
    return None


def _annotations(args):
    if getattr(args, "annotations", None):
        return load_annotations(_need_file(args.annotations, "annotations file"))
    return None


def _models(paths):
    return [load_model(_need_file(m, "model")) for m in paths]


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _sidecar(path, suffix: str) -> str | None:
    return None if path in (None, "-") else f"{path}{suffix}"


# --------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    ds = _dataset(args.data)
    run = RunConfig.from_args(args)
    result = train(ds, _extractor(args), _train_config(args), _ext(args, ds.sentences), _annotations(args))
    model = result.model
    model.metadata["run_config"] = run.to_dict()
    save_model(model, args.model)
    log = {"run_config": run.to_dict(), "nll_trace": result.nll_trace, "num_features": model.num_features}
    _write(f"{args.model}.log.json", dumps_report(log))
    print(f"trained on {len(ds)} sentences, {model.num_features} features, final nll {result.nll_trace[-1]:.4f}")
    return 0


def cmd_eval(args) -> int:
    ds = _dataset(args.data)
    models = _models(args.model)
    ext, ann = _ext(args, ds.sentences), _annotations(args)
    per_model = [predict(m, ds.sentences, ext, ann) for m in models]
    raw = [ensemble_vote([p[i] for p in per_model]) for i in range(len(ds))] if len(models) > 1 else per_model[0]
    heur = _heuristics(args)
    gold = [s.gold_tags for s in ds]
    report = evaluate_predictions(gold, [postprocess(t, heur) for t in raw])
    raw_report = evaluate(gold, raw)
    if args.table:
        _write(args.out, format_table({"raw": raw_report, "heuristics": report}))
    else:
        out = {"run_config": RunConfig.from_args(args).to_dict(), "report": report.to_dict(), "raw_report": raw_report.to_dict(), "notes": METRIC_NOTES}
        _write(args.out, dumps_report(out))
    return 0


def cmd_crossval(args) -> int:
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    ds = _dataset(args.data)
    res = crossval(ds, args.folds, args.seed, _train_config(args), _heuristics(args), _extractor(args), args.jobs)
    run = RunConfig.from_args(args)
    if args.save_models:
        d = Path(args.save_models)
        d.mkdir(parents=True, exist_ok=True)
        for f in res.folds:
            f.model.metadata["run_config"] = run.to_dict()
            f.model.metadata["fold"] = f.fold
            save_model(f.model, d / f"fold{f.fold}.json")
    if args.table:
        rows = {f"fold {f.fold}": f.report for f in res.folds}
        rows["mean (raw)"] = res.raw_mean
        rows["mean"] = res.mean
        _write(args.out, format_table(rows))
        return 0
    out = {
        "run_config": run.to_dict(),
        "folds": [{"fold": f.fold, "size": len(f.test_indices), "report": f.report.to_dict()} for f in res.folds],
        "mean": res.mean.to_dict(),
        "raw_mean": res.raw_mean.to_dict(),
        "notes": METRIC_NOTES,
    }
    _write(args.out, dumps_report(out))
    return 0


def cmd_predict(args) -> int:
    sentences = _sentences(args.data)
    models = _models(args.model)
    ext, ann = _ext(args, sentences), _annotations(args)
    per_model = [predict(m, sentences, ext, ann) for m in models]
    heur = _heuristics(args)
    tagged = []
    for i, s in enumerate(sentences):
        tags = ensemble_vote([p[i] for p in per_model]) if len(models) > 1 else per_model[0][i]
        tagged.append(s.with_tags(postprocess(tags, heur).tags))
    _write(args.out, write_conll(tagged) if args.format == "conll" else write_jsonl(tagged))
    side = _sidecar(args.out, ".run.json")
    if side:
        _write(side, dumps_report({"run_config": RunConfig.from_args(args).to_dict()}))
    return 0


def cmd_scan(args) -> int:
    docs = _read_docs(args.docs)
    models = _models(args.model)
    records, stats = scan_corpus(docs, models, _ext(args), _heuristics(args), args.emit_negatives, args.jobs)
    _write(args.out, dumps_records(records))
    payload = dumps_report({"run_config": RunConfig.from_args(args).to_dict(), "stats": stats.to_json()})
    stats_path = args.stats or _sidecar(args.out, ".stats.json")
    if stats_path:
        _write(stats_path, payload)
    else:
        sys.stderr.write(payload)
    return 0


def cmd_analyze(args) -> int:
    records = loads_records(_need_file(args.records, "records").read_text("utf-8"))
    gold = _sentences(args.gold)
    report = analyze_predictions(records, gold)
    _write(args.out, dumps_report({"run_config": RunConfig.from_args(args).to_dict(), "analysis": report}))
    return 0


def cmd_agreement(args) -> int:
    units = load_agreement(_need_file(args.annotations, "annotations file"))
    kinds = ("TERM", "DEF") if args.kind == "both" else (args.kind.upper(),)
    alphas = {k: krippendorff_alpha(units, k) for k in kinds}
    _write(args.out, dumps_report({"run_config": RunConfig.from_args(args).to_dict(), "alpha": alphas, "units": len(units)}))
    return 0


def cmd_preprocess(args) -> int:
    abbreviations = load_abbreviations()
    sentences = [s for d in _read_docs(args.docs) for s in preprocess_document(d, abbreviations)]
    _write(args.out, write_jsonl(sentences))
    return 0


# --------------------------------------------------------------------------
# entry point


def _load_config(path, command: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config not found: {path}")
    try:
        obj = json.loads(p.read_text("utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"config {path}: {e}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"config {path}: expected a JSON object")
    section = obj.get(command, {})
    flat = {k: v for k, v in obj.items() if not isinstance(v, dict)}
    flat.update(section if isinstance(section, dict) else {})
    return {k.replace("-", "_"): v for k, v in flat.items()}


def _subparsers(parser) -> dict:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    raise RuntimeError("parser has no subcommands")


def _peek(argv) -> tuple[str | None, str | None]:
    """Command name and --config value, found before full parsing."""
    command = next((a for a in argv if not a.startswith("-")), None)
    config = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif a.startswith("--config="):
            config = a.split("=", 1)[1]
    return command, config


def _apply_config(parser, command: str, path: str) -> None:
    subs = _subparsers(parser)
    cfg = _load_config(path, command)
    all_dests = {a.dest for sp in subs.values() for a in sp._actions}
    unknown = sorted(set(cfg) - all_dests - {"config", "func", "help"})
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    sp = subs[command]
    known = {a.dest for a in sp._actions} - {"config", "func", "help"}
    sp.set_defaults(**{k: v for k, v in cfg.items() if k in known})
    for a in sp._actions:
        if a.dest in cfg:
            a.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command, config_path = _peek(argv)
    config_path = config_path or os.environ.get(CONFIG_ENV)
    if config_path and command in _subparsers(parser):
        try:
            _apply_config(parser, command, config_path)
        except UsageError as e:
            print(f"defextract {command}: error: {e}", file=sys.stderr)
            return 2
    args = parser.parse_args(argv)
    try:
        try:
            RunConfig.from_args(args)  # validates training and heuristics settings
        except ValueError as e:
            raise UsageError(str(e)) from None
        return args.func(args)
    except UsageError as e:
        print(f"defextract {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        print(f"defextract {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
