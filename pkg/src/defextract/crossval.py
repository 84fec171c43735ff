"""k-fold cross-validation of the tagger plus heuristics."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .corpus import Dataset, FoldAssignment, split_folds
from .crf import CrfModel, TrainConfig, predict, train
from .features import FeatureExtractor
from .heuristics import HeuristicsConfig, postprocess
from .metrics import EvalReport, evaluate, evaluate_predictions, mean_report


@dataclass
class FoldResult:
    fold: int
    report: EvalReport  # after heuristics
    raw_report: EvalReport  # raw CRF output
    model: CrfModel
    test_indices: list[int]
    raw_predictions: list[list]


@dataclass
class CrossValResult:
    assignment: FoldAssignment
    folds: list[FoldResult]
    mean: EvalReport
    raw_mean: EvalReport

    @property
    def fold_reports(self) -> list[EvalReport]:
        return [f.report for f in self.folds]

    @property
    def models(self) -> list[CrfModel]:
        return [f.model for f in self.folds]


def run_fold(
    dataset: Dataset,
    assignment: FoldAssignment,
    fold: int,
    config: TrainConfig,
    heuristics: HeuristicsConfig,
    extractor: FeatureExtractor,
) -> FoldResult:
    test_idx = assignment.fold(fold)
    if not test_idx:
        raise ValueError(f"fold {fold} is empty")
    train_idx = [i for i, f in enumerate(assignment.fold_of) if f != fold]
    model = train(dataset.subset(train_idx), extractor, config).model
    test = dataset.subset(test_idx)
    raw = predict(model, test.sentences)
    gold = [s.gold_tags for s in test]
    post = [postprocess(tags, heuristics) for tags in raw]
    return FoldResult(fold, evaluate_predictions(gold, post), evaluate(gold, raw), model, test_idx, raw)


def _run_fold_args(args):
    return run_fold(*args)


def crossval(
    dataset: Dataset,
    k: int = 10,
    seed: int = 0,
    config: TrainConfig | None = None,
    heuristics: HeuristicsConfig | None = None,
    extractor: FeatureExtractor | None = None,
    jobs: int = 1,
) -> CrossValResult:
    """Train on k-1 folds, evaluate the held-out fold, average the fold reports.

    ``seed`` drives the fold split; training uses ``config.seed``. Folds are
    independent, so ``jobs > 1`` runs them in worker processes without
    changing any result.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    config = config or TrainConfig()
    heuristics = heuristics or HeuristicsConfig()
    extractor = extractor or FeatureExtractor()
    assignment = split_folds(dataset, k, seed)
    args = [(dataset, assignment, f, config, heuristics, extractor) for f in range(k)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold_args, args))
    else:
        folds = [run_fold(*a) for a in args]
    return CrossValResult(
        assignment,
        folds,
        mean_report([f.report for f in folds]),
        mean_report([f.raw_report for f in folds]),
    )
