import pytest

from defextract.corpus import Dataset, FoldAssignment
from defextract.crf import TrainConfig
from defextract.crossval import crossval, run_fold
from defextract.features import FeatureExtractor
from defextract.heuristics import HeuristicsConfig
from defextract.metrics import dumps_report
from defextract.synthetic import generate_cue_corpus

FAST = TrainConfig(epochs=3)


@pytest.fixture(scope="module")
def small():
    return generate_cue_corpus(40, seed=3)


def test_symmetric_duplicate_folds_agree(small):
    half = small.subset(range(20))
    doubled = Dataset(half.sentences + half.sentences)
    assignment = FoldAssignment(tuple([0] * 20 + [1] * 20), 2)
    a = run_fold(doubled, assignment, 0, FAST, HeuristicsConfig(), FeatureExtractor())
    b = run_fold(doubled, assignment, 1, FAST, HeuristicsConfig(), FeatureExtractor())
    assert a.report == b.report


def test_deterministic(small):
    a = crossval(small, 4, seed=1, config=FAST)
    b = crossval(small, 4, seed=1, config=FAST)
    assert dumps_report(a.mean.to_dict()) == dumps_report(b.mean.to_dict())


def test_jobs_do_not_change_results(small):
    a = crossval(small, 4, seed=2, config=FAST, jobs=1)
    b = crossval(small, 4, seed=2, config=FAST, jobs=2)
    assert a.mean == b.mean
    assert [f.report for f in a.folds] == [f.report for f in b.folds]


def test_structure(small):
    res = crossval(small, 5, seed=0, config=FAST)
    assert len(res.fold_reports) == 5 and len(res.models) == 5
    assert sorted(i for f in res.folds for i in f.test_indices) == list(range(len(small)))


def test_k_too_large(small):
    with pytest.raises(ValueError):
        crossval(small.subset(range(3)), 4, config=FAST)


def test_k_too_small(small):
    with pytest.raises(ValueError):
        crossval(small, 1, config=FAST)


def test_empty_fold(small):
    assignment = FoldAssignment(tuple([0] * len(small)), 2)
    with pytest.raises(ValueError, match="empty"):
        run_fold(small, assignment, 1, FAST, HeuristicsConfig(), FeatureExtractor())
