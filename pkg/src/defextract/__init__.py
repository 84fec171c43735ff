"""Term and definition extraction from scholarly text with a linear-chain CRF."""

__version__ = "0.1.0"

from .corpus import Dataset, ParseError, Sentence, SlotTag, Span, load_dataset, parse_conll, write_conll
from .crf import CrfModel, TrainConfig, load_model, predict, save_model, train, viterbi
from .features import FeatureExtractor, PatternInventory
from .heuristics import HeuristicsConfig, SentencePrediction, postprocess
from .metrics import EvalReport, ensemble_vote, evaluate
from .pipeline import GlossaryRecord, ScanStats, analyze_predictions, scan_document
from .preprocess import RawDocument, normalize, segment

__all__ = [
    "CrfModel",
    "Dataset",
    "EvalReport",
    "FeatureExtractor",
    "GlossaryRecord",
    "HeuristicsConfig",
    "ParseError",
    "PatternInventory",
    "RawDocument",
    "ScanStats",
    "Sentence",
    "SentencePrediction",
    "SlotTag",
    "Span",
    "TrainConfig",
    "analyze_predictions",
    "ensemble_vote",
    "evaluate",
    "load_dataset",
    "load_model",
    "normalize",
    "parse_conll",
    "postprocess",
    "predict",
    "save_model",
    "scan_document",
    "segment",
    "train",
    "viterbi",
    "write_conll",
]
