"""Binary kNN triage over embedding features.

Neighbors vote Benign vs Suspicious with a configurable vote multiplier for
Suspicious-labeled neighbors, which rebalances the minority class without
physically duplicating examples. Candidates are restricted to a trailing
time window at query time, falling back to the full training set when the
window is too sparse to supply k neighbors.
"""

from __future__ import annotations

import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .alerts import TriageLabel
from .embedding import EmbeddingVector


class EmptyTrainingSet(ValueError):
    pass


class TooFewExamples(ValueError):
    pass


class SingleClassData(ValueError):
    pass


@dataclass(frozen=True)
class LabeledExample:
    """One training point. The vector must be nonzero; zero-coverage alerts
    are excluded from training upstream."""

    example_id: str
    vector: EmbeddingVector
    label: TriageLabel
    timestamp: datetime


@dataclass(frozen=True)
class KnnConfig:
    k: int = 15
    malicious_weight: float = 1.0
    window: timedelta = timedelta(minutes=30)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.malicious_weight < 1.0:
            raise ValueError("malicious_weight must be >= 1")
        if self.window <= timedelta(0):
            raise ValueError("window must be positive")


@dataclass(frozen=True)
class Metrics:
    """Precision/recall/F1 with Suspicious as the positive class, plus the
    confusion counts they were computed from."""

    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_confusion(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = f1_score(precision, recall)
        return cls(precision, recall, f1, tp, fp, tn, fn)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
        }


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


class _PreparedTrain:
    """Training set sorted by (timestamp, id) with cached vector norms, so
    repeated queries can bisect the time window instead of scanning."""

    def __init__(self, train: list[LabeledExample]):
        self.examples = sorted(train, key=lambda ex: (ex.timestamp, ex.example_id))
        self.timestamps = [ex.timestamp for ex in self.examples]
        self.norms = [float(np.linalg.norm(ex.vector.values)) for ex in self.examples]

    def window_slice(self, lo: datetime, hi: datetime) -> range:
        return range(bisect_left(self.timestamps, lo), bisect_right(self.timestamps, hi))


def _vote(prep: _PreparedTrain, cfg: KnnConfig, query: EmbeddingVector, at: datetime) -> TriageLabel:
    indices = prep.window_slice(at - cfg.window, at)
    if len(indices) < cfg.k:
        indices = range(len(prep.examples))

    qnorm = float(np.linalg.norm(query.values))
    scored = []
    for i in indices:
        ex = prep.examples[i]
        sim = float(np.dot(query.values, ex.vector.values) / (qnorm * prep.norms[i]))
        scored.append((sim, ex))
    # highest similarity first; ties by earlier timestamp, then id
    scored.sort(key=lambda s: (-s[0], s[1].timestamp, s[1].example_id))
    neighbors = scored[: cfg.k]

    n_suspicious = sum(1 for _, ex in neighbors if ex.label is TriageLabel.SUSPICIOUS)
    n_benign = len(neighbors) - n_suspicious
    suspicious_votes = cfg.malicious_weight * n_suspicious
    # tie predicts Suspicious: a missed threat costs more than a false alarm
    if suspicious_votes >= n_benign:
        return TriageLabel.SUSPICIOUS
    return TriageLabel.BENIGN


def classify(
    train: list[LabeledExample],
    cfg: KnnConfig,
    query: EmbeddingVector,
    at: datetime,
) -> TriageLabel:
    """Weighted-vote kNN prediction for a nonzero query vector.

    Candidates are training examples with timestamp in [at - window, at];
    if fewer than k exist the full training set is used. The k most similar
    candidates vote, Suspicious neighbors with weight cfg.malicious_weight,
    Benign with 1; ties predict Suspicious (fail-safe).
    """
    if not train:
        raise EmptyTrainingSet("no training examples")
    return _vote(_PreparedTrain(train), cfg, query, at)


def assign_folds(data: list[LabeledExample], folds: int, seed: int) -> dict[str, int]:
    """Stratified fold assignment: per class, shuffle example ids with the
    seeded RNG (Benign first, then Suspicious, sharing one RNG stream) and
    deal them round-robin. Depends only on the seed and the stable ids."""
    rng = random.Random(seed)
    assignment: dict[str, int] = {}
    for label in (TriageLabel.BENIGN, TriageLabel.SUSPICIOUS):
        ids = sorted(ex.example_id for ex in data if ex.label is label)
        rng.shuffle(ids)
        for i, example_id in enumerate(ids):
            assignment[example_id] = i % folds
    return assignment


def evaluate_cv(
    data: list[LabeledExample],
    cfg: KnnConfig,
    folds: int = 10,
    seed: int = 0,
) -> Metrics:
    """Stratified k-fold cross-validation aggregated into one confusion matrix.

    Each example is classified at its own timestamp against the examples of
    the other folds. Deterministic given (data, cfg, folds, seed); the input
    order of ``data`` does not matter.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if len(data) < folds:
        raise TooFewExamples(f"{len(data)} examples < {folds} folds")

    assignment = assign_folds(data, folds, seed)
    ordered = sorted(data, key=lambda ex: ex.example_id)

    tp = fp = tn = fn = 0
    for fold in range(folds):
        prep = _PreparedTrain([ex for ex in ordered if assignment[ex.example_id] != fold])
        for ex in ordered:
            if assignment[ex.example_id] != fold:
                continue
            predicted = _vote(prep, cfg, ex.vector, ex.timestamp)
            if ex.label is TriageLabel.SUSPICIOUS:
                if predicted is TriageLabel.SUSPICIOUS:
                    tp += 1
                else:
                    fn += 1
            else:
                if predicted is TriageLabel.SUSPICIOUS:
                    fp += 1
                else:
                    tn += 1
    return Metrics.from_confusion(tp, fp, tn, fn)


def fit_weight(data: list[LabeledExample]) -> float:
    """Default malicious_weight: benign count over suspicious count, clamped
    to >= 1, so both classes carry equal total vote mass."""
    benign = sum(1 for ex in data if ex.label is TriageLabel.BENIGN)
    suspicious = sum(1 for ex in data if ex.label is TriageLabel.SUSPICIOUS)
    if benign == 0 or suspicious == 0:
        raise SingleClassData("need at least one example of each class")
    return max(1.0, benign / suspicious)
