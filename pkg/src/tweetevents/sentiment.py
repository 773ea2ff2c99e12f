"""Ordinal three-class tweet sentiment: preprocessing, TF-IDF features, the
two-classifier ordinal wrapper, cross-validation and agreement measures.

Labels are integers: -1 negative, 0 neutral, +1 positive.  The two binary
classifiers separate positive vs rest and negative vs rest; ordering of the
classes makes the pair sufficient, and disagreement resolves to neutral.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import StateError, ValidationError

NEGATIVE, NEUTRAL, POSITIVE = -1, 0, 1
LABELS = (NEGATIVE, NEUTRAL, POSITIVE)

PREPROCESS_VERSION = "tweetevents-prep-1"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_CASHTAG_RE = re.compile(r"\$[a-zA-Z]\w*")
_MENTION_RE = re.compile(r"@\w+")
_REPEAT_RE = re.compile(r"([a-z])\1{2,}")
_TOKEN_RE = re.compile(r"[a-z0-9_]+(?:'[a-z0-9_]+)*")


@dataclass(frozen=True)
class LabeledTweet:
    text: str
    label: int
    label2: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("LabeledTweet: empty text")
        if self.label not in LABELS:
            raise ValidationError(f"LabeledTweet: label must be -1/0/1, got {self.label}")
        if self.label2 is not None and self.label2 not in LABELS:
            raise ValidationError(f"LabeledTweet: label2 must be -1/0/1, got {self.label2}")


def preprocess(text: str, lemmatizer=None) -> list[str]:
    """Normalize a tweet into tokens.

    Removes URLs, cash-tags ($ + letters) and user mentions, lowercases,
    collapses runs of 3+ identical letters to 2, then tokenizes on
    [a-z0-9_]+ words (internal apostrophes kept).  Stop words are retained;
    ``lemmatizer`` is an optional per-token hook (identity by default).
    """
    text = _URL_RE.sub(" ", text)
    text = _CASHTAG_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = text.lower()
    text = _REPEAT_RE.sub(r"\1\1", text)
    tokens = _TOKEN_RE.findall(text)
    if lemmatizer is not None:
        tokens = [lemmatizer(t) for t in tokens]
    return tokens


def _terms(tokens: list[str]) -> list[str]:
    """Unigrams plus adjacent bigrams."""
    return tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


class FeatureSpace:
    """Unigram+bigram vocabulary with smoothed IDF weights.

    IDF = log((1 + N) / (1 + df)) + 1 over N fitted documents.  ``normalize``
    switches on L2 normalization of the TF-IDF vectors (off by default).
    """

    def __init__(self, normalize: bool = False):
        self.vocabulary: dict[str, int] = {}
        self.doc_freq: np.ndarray | None = None
        self.n_docs = 0
        self.normalize = normalize
        self._idf: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self._idf is not None

    @property
    def idf(self) -> np.ndarray:
        if not self.fitted:
            raise StateError("FeatureSpace: transform before fit")
        return self._idf

    def fit(self, token_docs: list[list[str]]) -> "FeatureSpace":
        self.vocabulary = {}
        counts: list[int] = []
        for tokens in token_docs:
            for term in set(_terms(tokens)):
                idx = self.vocabulary.get(term)
                if idx is None:
                    self.vocabulary[term] = len(counts)
                    counts.append(1)
                else:
                    counts[idx] += 1
        self.n_docs = len(token_docs)
        self.doc_freq = np.asarray(counts, dtype=np.int64)
        self._idf = np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0
        return self

    def transform(self, tokens: list[str]) -> tuple[np.ndarray, np.ndarray]:
        """Sparse TF-IDF vector for one document: (indices, values)."""
        idf = self.idf
        tf: dict[int, float] = {}
        for term in _terms(tokens):
            idx = self.vocabulary.get(term)
            if idx is not None:
                tf[idx] = tf.get(idx, 0.0) + 1.0
        if not tf:
            return np.empty(0, dtype=np.int64), np.empty(0)
        indices = np.fromiter(sorted(tf), dtype=np.int64, count=len(tf))
        values = np.array([tf[int(i)] for i in indices]) * idf[indices]
        if self.normalize:
            norm = np.sqrt(values @ values)
            if norm > 0:
                values = values / norm
        return indices, values

    def transform_csr(self, token_docs: list[list[str]]):
        """Stack many documents into CSR arrays (data, indices, indptr)."""
        data, indices, indptr = [], [], [0]
        for tokens in token_docs:
            idx, vals = self.transform(tokens)
            indices.append(idx)
            data.append(vals)
            indptr.append(indptr[-1] + len(idx))
        return (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
            np.asarray(indptr, dtype=np.int64),
        )


def featurize(tokens, space: FeatureSpace | None, mode: str):
    """Functional wrapper over FeatureSpace.

    ``fit`` expects a list of token documents and returns the fitted space;
    ``transform`` expects one token list and a fitted space.
    """
    if mode == "fit":
        return (space or FeatureSpace()).fit(tokens)
    if mode == "transform":
        if space is None or not space.fitted:
            raise StateError("featurize: transform before fit")
        return space.transform(tokens)
    raise ValidationError(f"featurize: unknown mode {mode!r}")


@dataclass(frozen=True)
class TrainConfig:
    reg: float = 0.05
    epochs: int = 400
    normalize: bool = False

    def __post_init__(self):
        if self.reg <= 0:
            raise ValidationError("TrainConfig: reg must be > 0")
        if self.epochs < 1:
            raise ValidationError("TrainConfig: epochs must be >= 1")


@dataclass(frozen=True)
class OrdinalModel:
    """Two linear classifiers over one feature space.

    ``pos_weights/pos_bias`` score positive vs negative-or-neutral;
    ``neg_weights/neg_bias`` score negative vs positive-or-neutral.  A
    classifier "fires" when its decision value is strictly positive.
    """

    space: FeatureSpace
    pos_weights: np.ndarray
    pos_bias: float
    neg_weights: np.ndarray
    neg_bias: float
    config: TrainConfig = field(default_factory=TrainConfig)
    preprocess_version: str = PREPROCESS_VERSION

    def __post_init__(self):
        dim = len(self.space.vocabulary)
        if len(self.pos_weights) != dim or len(self.neg_weights) != dim:
            raise ValidationError("OrdinalModel: weight length != vocabulary size")

    def decision_values(self, text: str, lemmatizer=None) -> tuple[float, float]:
        indices, values = self.space.transform(preprocess(text, lemmatizer))
        pos = float(values @ self.pos_weights[indices] + self.pos_bias)
        neg = float(values @ self.neg_weights[indices] + self.neg_bias)
        return pos, neg


def _train_binary(data, indices, indptr, targets, dim, config: TrainConfig):
    w, b = kernels.svm_train(
        np.ascontiguousarray(data, dtype=np.float64),
        np.ascontiguousarray(indices, dtype=np.int64),
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(targets, dtype=np.float64),
        dim,
        config.reg,
        config.epochs,
    )
    return w, float(b)


def train(
    tweets: list[LabeledTweet],
    config: TrainConfig = TrainConfig(),
    lemmatizer=None,
) -> OrdinalModel:
    """Fit the ordinal wrapper: features on the full corpus, then the two
    binary max-margin classifiers by deterministic batch subgradient descent.
    """
    labels = np.array([t.label for t in tweets], dtype=np.int64)
    if len(set(labels.tolist())) < 2:
        raise ValidationError("train: need at least 2 classes")
    if not ((labels == POSITIVE).any() or (labels == NEGATIVE).any()):
        raise ValidationError("train: both extreme classes are empty")
    token_docs = [preprocess(t.text, lemmatizer) for t in tweets]
    space = FeatureSpace(normalize=config.normalize).fit(token_docs)
    data, idx, indptr = space.transform_csr(token_docs)
    dim = len(space.vocabulary)
    pos_targets = np.where(labels == POSITIVE, 1.0, -1.0)
    neg_targets = np.where(labels == NEGATIVE, 1.0, -1.0)
    pos_w, pos_b = _train_binary(data, idx, indptr, pos_targets, dim, config)
    neg_w, neg_b = _train_binary(data, idx, indptr, neg_targets, dim, config)
    return OrdinalModel(space, pos_w, pos_b, neg_w, neg_b, config)


def predict(model: OrdinalModel, text: str, lemmatizer=None) -> int:
    """Ordinal wrapper decision: positive / negative when exactly one
    classifier fires, neutral when both or neither do."""
    pos, neg = model.decision_values(text, lemmatizer)
    pos_fires = pos > 0
    neg_fires = neg > 0
    if pos_fires and not neg_fires:
        return POSITIVE
    if neg_fires and not pos_fires:
        return NEGATIVE
    return NEUTRAL


def wrapper_decision(pos_fires: bool, neg_fires: bool) -> int:
    """The three-way contract on raw classifier outcomes (exposed for tests)."""
    if pos_fires and not neg_fires:
        return POSITIVE
    if neg_fires and not pos_fires:
        return NEGATIVE
    return NEUTRAL


# ---------------------------------------------------------------------------
# Evaluation measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    """Measure set of the evaluation harness.

    ``accuracy_pm1`` counts only extreme-to-opposite-extreme confusions as
    errors over all examples; ``f1_mean`` averages the F1 of the two extreme
    classes.  ``ci95`` holds half-widths over cross-validation folds and is
    empty for single evaluations.
    """

    accuracy: float
    accuracy_pm1: float
    f1_mean: float
    precision: dict
    recall: dict
    f1: dict
    n_examples: int
    ci95: dict = field(default_factory=dict)


def evaluate(predicted, actual) -> EvalReport:
    """Exact-match accuracy, Accuracy+-1, and per-class precision/recall/F1."""
    predicted = np.asarray(predicted, dtype=np.int64)
    actual = np.asarray(actual, dtype=np.int64)
    if predicted.shape != actual.shape or predicted.ndim != 1:
        raise ValidationError("evaluate: label vectors must be 1-d of equal length")
    n = len(actual)
    if n < 1:
        raise ValidationError("evaluate: empty input")
    accuracy = float((predicted == actual).mean())
    extreme_flips = int(
        np.sum((actual == NEGATIVE) & (predicted == POSITIVE))
        + np.sum((actual == POSITIVE) & (predicted == NEGATIVE))
    )
    accuracy_pm1 = 1.0 - extreme_flips / n
    precision, recall, f1 = {}, {}, {}
    for label in LABELS:
        tp = float(np.sum((predicted == label) & (actual == label)))
        n_pred = float(np.sum(predicted == label))
        n_true = float(np.sum(actual == label))
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_true if n_true else 0.0
        precision[label] = p
        recall[label] = r
        f1[label] = 2 * p * r / (p + r) if p + r else 0.0
    f1_mean = (f1[NEGATIVE] + f1[POSITIVE]) / 2.0
    return EvalReport(accuracy, accuracy_pm1, f1_mean, precision, recall, f1, n)


def agreement(tweets: list[LabeledTweet]) -> EvalReport:
    """Inter-annotator agreement over doubly labeled tweets, first annotation
    as reference.  (A symmetrized variant would differ; this convention is
    reported as-is.)"""
    pairs = [(t.label, t.label2) for t in tweets if t.label2 is not None]
    if not pairs:
        raise ValidationError("agreement: no doubly labeled tweets")
    reference = [a for a, _ in pairs]
    second = [b for _, b in pairs]
    return evaluate(second, reference)


def cross_validate(
    tweets: list[LabeledTweet],
    folds: int = 10,
    seed: int = 0,
    config: TrainConfig = TrainConfig(),
    lemmatizer=None,
) -> EvalReport:
    """Seeded k-fold cross-validation; measures averaged over folds with 95%
    confidence half-widths (1.96 * sd / sqrt(folds)).

    A fold whose training split loses class diversity (possible on tiny
    inputs) falls back to the never-firing model, i.e. all-neutral
    predictions, instead of aborting the run.
    """
    if folds < 2:
        raise ValidationError("cross_validate: folds must be >= 2")
    if len(tweets) < folds:
        raise ValidationError(
            f"cross_validate: {len(tweets)} examples cannot fill {folds} folds"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(tweets))
    chunks = np.array_split(order, folds)
    rows = []
    for k in range(folds):
        test_idx = set(chunks[k].tolist())
        train_set = [tweets[i] for i in order if i not in test_idx]
        test_set = [tweets[i] for i in chunks[k]]
        try:
            model = train(train_set, config, lemmatizer)
            predicted = [predict(model, t.text, lemmatizer) for t in test_set]
        except ValidationError:
            predicted = [NEUTRAL] * len(test_set)
        actual = [t.label for t in test_set]
        rows.append(evaluate(predicted, actual))
    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in rows]))
    def ci(attr):
        vals = np.array([getattr(r, attr) for r in rows])
        return float(1.96 * vals.std(ddof=1) / np.sqrt(folds))
    precision = {l: float(np.mean([r.precision[l] for r in rows])) for l in LABELS}
    recall = {l: float(np.mean([r.recall[l] for r in rows])) for l in LABELS}
    f1 = {l: float(np.mean([r.f1[l] for r in rows])) for l in LABELS}
    return EvalReport(
        accuracy=mean("accuracy"),
        accuracy_pm1=mean("accuracy_pm1"),
        f1_mean=mean("f1_mean"),
        precision=precision,
        recall=recall,
        f1=f1,
        n_examples=len(tweets),
        ci95={
            "accuracy": ci("accuracy"),
            "accuracy_pm1": ci("accuracy_pm1"),
            "f1_mean": ci("f1_mean"),
        },
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def model_to_json(model: OrdinalModel) -> str:
    vocab = sorted(model.space.vocabulary, key=model.space.vocabulary.get)
    payload = {
        "format": "tweetevents-ordinal-model-v1",
        "preprocess_version": model.preprocess_version,
        "normalize": model.space.normalize,
        "n_docs": model.space.n_docs,
        "vocabulary": vocab,
        "doc_freq": model.space.doc_freq.tolist(),
        "idf": model.space.idf.tolist(),
        "positive": {"weights": model.pos_weights.tolist(), "bias": model.pos_bias},
        "negative": {"weights": model.neg_weights.tolist(), "bias": model.neg_bias},
        "config": {"reg": model.config.reg, "epochs": model.config.epochs},
    }
    return json.dumps(payload)


def model_from_json(text: str) -> OrdinalModel:
    payload = json.loads(text)
    if payload.get("format") != "tweetevents-ordinal-model-v1":
        raise ValidationError("model_from_json: unknown model format")
    space = FeatureSpace(normalize=payload["normalize"])
    space.vocabulary = {term: i for i, term in enumerate(payload["vocabulary"])}
    space.doc_freq = np.asarray(payload["doc_freq"], dtype=np.int64)
    space.n_docs = int(payload["n_docs"])
    space._idf = np.asarray(payload["idf"], dtype=np.float64)
    cfg = TrainConfig(
        reg=payload["config"]["reg"],
        epochs=payload["config"]["epochs"],
        normalize=payload["normalize"],
    )
    return OrdinalModel(
        space=space,
        pos_weights=np.asarray(payload["positive"]["weights"], dtype=np.float64),
        pos_bias=float(payload["positive"]["bias"]),
        neg_weights=np.asarray(payload["negative"]["weights"], dtype=np.float64),
        neg_bias=float(payload["negative"]["bias"]),
        config=cfg,
        preprocess_version=payload["preprocess_version"],
    )
