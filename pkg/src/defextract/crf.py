"""Linear-chain CRF over the five slot tags.

A sequence ``y`` of length ``T`` scores

    sum_t [W[feats_t, y_t] + ext[t, y_t]] + bos[y_0] + sum_t A[y_{t-1}, y_t] + eos[y_{T-1}]

where ``W`` are emission weights (one row per feature), ``A`` the transition
matrix indexed ``[prev, next]`` and ``ext`` optional externally supplied
token scores. Decoding is exact Viterbi; training minimises the L2-penalised
negative log-likelihood with seeded mini-batch gradient descent.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import NUM_TAGS, TAGS, Dataset, Sentence, SlotTag
from .features import Annotation, FeatureExtractor

log = logging.getLogger(__name__)

MODEL_FORMAT = "defextract-crf"
MODEL_VERSION = 1

# Stands in for -inf so arithmetic stays finite.
FORBIDDEN = -1e9


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 0.05
    l2: float = 1e-3
    max_sentence_length: int = 256
    seed: int = 0
    batch_size: int = 8
    constrained: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.max_sentence_length < 1:
            raise ValueError("max_sentence_length must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class Weights:
    emission: np.ndarray  # (num_features, 5)
    transition: np.ndarray  # (5, 5) [prev, next]
    bos: np.ndarray  # (5,)
    eos: np.ndarray  # (5,)

    @classmethod
    def zeros(cls, num_features: int) -> "Weights":
        return cls(
            np.zeros((num_features, NUM_TAGS)),
            np.zeros((NUM_TAGS, NUM_TAGS)),
            np.zeros(NUM_TAGS),
            np.zeros(NUM_TAGS),
        )

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [self.emission.ravel(), self.transition.ravel(), self.bos, self.eos]
        )

    def from_vector(self, v: np.ndarray) -> "Weights":
        f = self.emission.size
        return Weights(
            v[:f].reshape(self.emission.shape).copy(),
            v[f:f + NUM_TAGS**2].reshape(NUM_TAGS, NUM_TAGS).copy(),
            v[f + NUM_TAGS**2:f + NUM_TAGS**2 + NUM_TAGS].copy(),
            v[f + NUM_TAGS**2 + NUM_TAGS:].copy(),
        )

    def copy(self) -> "Weights":
        return self.from_vector(self.vector())


@dataclass
class CrfModel:
    feature_index: dict[str, int]
    weights: Weights
    config: TrainConfig = field(default_factory=TrainConfig)
    extractor: FeatureExtractor = field(default_factory=FeatureExtractor)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, feature_names: Sequence[str], config: TrainConfig | None = None, **kw) -> "CrfModel":
        index = {f: i for i, f in enumerate(feature_names)}
        return cls(index, Weights.zeros(len(index)), config or TrainConfig(), **kw)

    @property
    def num_features(self) -> int:
        return len(self.feature_index)

    def encode(self, feats: Sequence[frozenset[str]]) -> sp.csr_matrix:
        """Token-by-feature indicator matrix; unseen features are dropped."""
        indptr = [0]
        indices = []
        for fv in feats:
            ids = sorted(self.feature_index[f] for f in fv if f in self.feature_index)
            indices.extend(ids)
            indptr.append(len(indices))
        data = np.ones(len(indices))
        return sp.csr_matrix(
            (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(feats), self.num_features),
        )

    def featurize(self, sentence: Sentence, annotation: Annotation | None = None) -> sp.csr_matrix:
        return self.encode(self.extractor.extract(sentence, annotation))


def _as_matrix(model: CrfModel, feats) -> sp.csr_matrix:
    if sp.issparse(feats):
        return feats.tocsr()
    return model.encode(feats)


def emissions(model: CrfModel, feats, ext=None) -> np.ndarray:
    X = _as_matrix(model, feats)
    E = np.asarray(X @ model.weights.emission)
    if ext is not None:
        ext = np.asarray(ext, dtype=float)
        if ext.shape != E.shape:
            raise ValueError(f"external scores shape {ext.shape} != {E.shape}")
        E = E + ext
    return E


def _tag_ids(tags) -> np.ndarray:
    return np.array([SlotTag(t).index for t in tags], dtype=np.int64)


def score_potentials(E, transition, bos, eos, y) -> float:
    T = len(y)
    s = float(bos[y[0]]) + float(eos[y[-1]])
    s += float(E[np.arange(T), y].sum())
    if T > 1:
        s += float(transition[y[:-1], y[1:]].sum())
    return s


def sequence_score(model: CrfModel, feats, tags, ext=None) -> float:
    E = emissions(model, feats, ext)
    if E.shape[0] != len(tags):
        raise ValueError("feature and tag sequences differ in length")
    if len(tags) == 0:
        return 0.0
    w = model.weights
    return score_potentials(E, w.transition, w.bos, w.eos, _tag_ids(tags))


# --------------------------------------------------------------------------
# decoding

_ALLOWED = np.array(
    [[not (TAGS[b].is_inside and TAGS[a].kind != TAGS[b].kind) for b in range(NUM_TAGS)] for a in range(NUM_TAGS)]
)
_START_ALLOWED = np.array([not t.is_inside for t in TAGS])


def constrain(transition, bos):
    """Potentials with BIO-illegal moves pushed to ``FORBIDDEN``."""
    return (
        np.where(_ALLOWED, transition, transition + FORBIDDEN),
        np.where(_START_ALLOWED, bos, bos + FORBIDDEN),
    )


def viterbi_potentials(E, transition, bos, eos) -> np.ndarray:
    """Best tag indices; ties go to the lexicographically smallest sequence.

    Best suffix scores are computed right to left, then tags are chosen left
    to right taking the lowest index among maximisers at each position.
    """
    T = E.shape[0]
    suffix = np.empty_like(E)
    suffix[T - 1] = eos
    for t in range(T - 2, -1, -1):
        suffix[t] = (transition + (E[t + 1] + suffix[t + 1])[None, :]).max(axis=1)
    y = np.empty(T, dtype=np.int64)
    y[0] = int(np.argmax(bos + E[0] + suffix[0]))
    for t in range(1, T):
        y[t] = int(np.argmax(transition[y[t - 1]] + (E[t] + suffix[t])))
    return y


def viterbi(model: CrfModel, feats, ext=None, constrained: bool | None = None) -> tuple[list[SlotTag], float]:
    E = emissions(model, feats, ext)
    if E.shape[0] == 0:
        raise ValueError("cannot decode an empty sentence")
    w = model.weights
    trans, bos = w.transition, w.bos
    if constrained if constrained is not None else model.config.constrained:
        trans, bos = constrain(trans, bos)
    y = viterbi_potentials(E, trans, bos, w.eos)
    return [TAGS[i] for i in y], score_potentials(E, trans, bos, w.eos, y)


# --------------------------------------------------------------------------
# likelihood


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def forward_backward(E, transition, bos, eos):
    """Log-space forward/backward tables and log partition function."""
    T = E.shape[0]
    alpha = np.empty_like(E)
    beta = np.empty_like(E)
    alpha[0] = bos + E[0]
    for t in range(1, T):
        alpha[t] = _lse(alpha[t - 1][:, None] + transition, axis=0) + E[t]
    beta[T - 1] = eos
    for t in range(T - 2, -1, -1):
        beta[t] = _lse(transition + (E[t + 1] + beta[t + 1])[None, :], axis=1)
    logz = float(_lse(alpha[T - 1] + eos, axis=0))
    return alpha, beta, logz


def log_partition(E, transition, bos, eos) -> float:
    return forward_backward(E, transition, bos, eos)[2]


def _sentence_nll_grad(w: Weights, X: sp.csr_matrix, y: np.ndarray, ext, grad: Weights) -> float:
    """Add one sentence's data-term gradient into ``grad``; return its nll."""
    E = np.asarray(X @ w.emission)
    if ext is not None:
        E = E + ext
    alpha, beta, logz = forward_backward(E, w.transition, w.bos, w.eos)
    T = E.shape[0]
    node = np.exp(alpha + beta - logz)
    grad.bos += node[0]
    grad.bos[y[0]] -= 1.0
    grad.eos += node[T - 1]
    grad.eos[y[-1]] -= 1.0
    node[np.arange(T), y] -= 1.0
    grad.emission += np.asarray(X.T @ node)
    if T > 1:
        edge = np.exp(
            alpha[:-1, :, None] + w.transition[None, :, :] + (E[1:] + beta[1:])[:, None, :] - logz
        )
        grad.transition += edge.sum(axis=0)
        np.add.at(grad.transition, (y[:-1], y[1:]), -1.0)
    return logz - score_potentials(E, w.transition, w.bos, w.eos, y)


def _prepare(model: CrfModel, item, max_len: int):
    feats, tags, *rest = item
    ext = rest[0] if rest else None
    X = _as_matrix(model, feats)
    y = _tag_ids(tags)
    if X.shape[0] != len(y):
        raise ValueError("feature and tag sequences differ in length")
    if ext is not None:
        ext = np.asarray(ext, dtype=float)
    if len(y) > max_len:
        log.warning("truncating sentence of length %d to %d", len(y), max_len)
        X, y = X[:max_len], y[:max_len]
        ext = None if ext is None else ext[:max_len]
    return X, y, ext


def log_likelihood_and_gradient(model: CrfModel, batch) -> tuple[float, Weights]:
    """Penalised negative log-likelihood of ``batch`` and its gradient.

    ``batch`` holds ``(feats, gold_tags)`` or ``(feats, gold_tags, ext)``
    items, where ``feats`` is a list of feature sets or an encoded matrix.
    """
    w = model.weights
    grad = Weights.zeros(model.num_features)
    nll = 0.0
    for item in batch:
        X, y, ext = _prepare(model, item, model.config.max_sentence_length)
        if len(y) == 0:
            continue
        nll += _sentence_nll_grad(w, X, y, ext, grad)
    l2 = model.config.l2
    if l2:
        v = w.vector()
        nll += 0.5 * l2 * float(v @ v)
        grad = grad.from_vector(grad.vector() + l2 * v)
    return nll, grad


# --------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    model: CrfModel
    nll_trace: list[float]


def build_feature_index(feature_sets) -> dict[str, int]:
    names = sorted({f for sent in feature_sets for fv in sent for f in fv})
    return {f: i for i, f in enumerate(names)}


def train(
    dataset: Dataset,
    extractor: FeatureExtractor | None = None,
    config: TrainConfig | None = None,
    ext: Mapping | None = None,
    annotations: Mapping | None = None,
) -> TrainResult:
    """Fit a CRF by seeded mini-batch proximal gradient descent.

    Each step takes a gradient step on the batch data term and then applies
    the L2 penalty in closed form, ``w <- (w - lr * g) / (1 + lr * l2)``,
    which stays stable for any penalty strength.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    extractor = extractor or FeatureExtractor()
    config = config or TrainConfig()
    ext = ext or {}
    annotations = annotations or {}
    feats = [extractor.extract(s, annotations.get(s.key)) for s in dataset]
    model = CrfModel(build_feature_index(feats), Weights.zeros(0), config, extractor)
    model.weights = Weights.zeros(model.num_features)
    items = [
        _prepare(model, (f, s.gold_tags, ext.get(s.key)), config.max_sentence_length)
        for f, s in zip(feats, dataset)
    ]
    rng = np.random.default_rng(config.seed)
    lr, l2 = config.learning_rate, config.l2
    trace = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(items))
        total = 0.0
        for b in range(0, len(order), config.batch_size):
            grad = Weights.zeros(model.num_features)
            for i in order[b:b + config.batch_size]:
                X, y, e = items[i]
                if len(y):
                    total += _sentence_nll_grad(model.weights, X, y, e, grad)
            v = (model.weights.vector() - lr * grad.vector()) / (1.0 + lr * l2)
            model.weights = model.weights.from_vector(v)
        v = model.weights.vector()
        trace.append(total + 0.5 * l2 * float(v @ v))
        log.debug("epoch %d nll %.4f", epoch, trace[-1])
    return TrainResult(model, trace)


# --------------------------------------------------------------------------
# prediction


def chunk_bounds(T: int, L: int) -> list[tuple[int, int]]:
    """Overlapping windows of length ``L`` with stride ``L // 2`` covering ``T``."""
    if T <= L:
        return [(0, T)]
    stride = max(1, L // 2)
    bounds = []
    start = 0
    while True:
        end = min(start + L, T)
        bounds.append((start, end))
        if end == T:
            return bounds
        start += stride


def stitch_choice(T: int, bounds: list[tuple[int, int]]) -> list[int]:
    """For each token, the chunk where it sits farthest from a chunk edge."""
    choice = []
    for t in range(T):
        best, best_d = -1, -1
        for c, (s, e) in enumerate(bounds):
            if s <= t < e:
                d = min(t - s, e - 1 - t)
                if d > best_d:
                    best, best_d = c, d
        choice.append(best)
    return choice


def predict_one(model: CrfModel, feats, ext=None, constrained: bool | None = None) -> list[SlotTag]:
    E = emissions(model, feats, ext)
    T = E.shape[0]
    if T == 0:
        return []
    w = model.weights
    trans, bos = w.transition, w.bos
    if constrained if constrained is not None else model.config.constrained:
        trans, bos = constrain(trans, bos)
    bounds = chunk_bounds(T, model.config.max_sentence_length)
    decoded = [viterbi_potentials(E[s:e], trans, bos, w.eos) for s, e in bounds]
    choice = stitch_choice(T, bounds)
    return [TAGS[decoded[c][t - bounds[c][0]]] for t, c in enumerate(choice)]


def predict(
    model: CrfModel,
    sentences: Sequence[Sentence],
    ext: Mapping | None = None,
    annotations: Mapping | None = None,
    constrained: bool | None = None,
) -> list[list[SlotTag]]:
    ext = ext or {}
    annotations = annotations or {}
    return [
        predict_one(model, model.featurize(s, annotations.get(s.key)), ext.get(s.key), constrained)
        for s in sentences
    ]


# --------------------------------------------------------------------------
# persistence


def model_to_dict(model: CrfModel) -> dict:
    names = [None] * model.num_features
    for f, i in model.feature_index.items():
        names[i] = f
    w = model.weights
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": asdict(model.config),
        "features": model.extractor.to_dict(),
        "metadata": model.metadata,
        "feature_names": names,
        "emission": w.emission.tolist(),
        "transition": w.transition.tolist(),
        "bos": w.bos.tolist(),
        "eos": w.eos.tolist(),
    }


def model_from_dict(d: dict) -> CrfModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not a defextract CRF model file")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')}")
    names = d["feature_names"]
    emission = np.array(d["emission"], dtype=float).reshape(len(names), NUM_TAGS)
    w = Weights(
        emission,
        np.array(d["transition"], dtype=float),
        np.array(d["bos"], dtype=float),
        np.array(d["eos"], dtype=float),
    )
    if not np.all(np.isfinite(w.vector())):
        raise ValueError("model contains non-finite weights")
    return CrfModel(
        {f: i for i, f in enumerate(names)},
        w,
        TrainConfig(**d["config"]),
        FeatureExtractor.from_dict(d["features"]),
        d.get("metadata", {}),
    )


def save_model(model: CrfModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")


def load_model(path) -> CrfModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
