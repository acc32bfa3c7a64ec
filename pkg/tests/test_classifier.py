import random
from datetime import timedelta

import pytest

import oracles
from conftest import at, axis_lexicon
from cyberally.alerts import TriageLabel
from cyberally.classifier import (
    EmptyTrainingSet,
    KnnConfig,
    LabeledExample,
    Metrics,
    SingleClassData,
    TooFewExamples,
    assign_folds,
    classify,
    evaluate_cv,
    f1_score,
    fit_weight,
)
from cyberally.embedding import embed

LEX = axis_lexicon()


def example(example_id, text, label, ts=0.0):
    return LabeledExample(
        example_id=example_id,
        vector=embed(LEX, text),
        label=label,
        timestamp=at(ts),
    )


def two_cluster_train(n_benign=6, n_susp=3, spread_s=60.0):
    out = []
    for i in range(n_benign):
        out.append(example(f"b{i}", "heartbeat status ok", TriageLabel.BENIGN, -spread_s * i - 1))
    for i in range(n_susp):
        out.append(example(f"s{i}", "intrusion breach attack", TriageLabel.SUSPICIOUS, -spread_s * i - 2))
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        KnnConfig(k=0)
    with pytest.raises(ValueError):
        KnnConfig(malicious_weight=0.5)
    with pytest.raises(ValueError):
        KnnConfig(window=timedelta(0))


def test_classify_nearest_cluster_wins():
    train = two_cluster_train()
    cfg = KnnConfig(k=3, malicious_weight=1.0)
    assert classify(train, cfg, embed(LEX, "heartbeat status ping"), at(0)) is TriageLabel.BENIGN
    assert classify(train, cfg, embed(LEX, "intrusion breach exploit"), at(0)) is TriageLabel.SUSPICIOUS


def test_classify_empty_training_raises():
    with pytest.raises(EmptyTrainingSet):
        classify([], KnnConfig(), embed(LEX, "heartbeat"), at(0))


def test_tie_vote_predicts_suspicious():
    train = [
        example("b0", "heartbeat status", TriageLabel.BENIGN, -1),
        example("s0", "intrusion breach", TriageLabel.SUSPICIOUS, -2),
    ]
    cfg = KnnConfig(k=2, malicious_weight=1.0)
    # one neighbor each: 1*1 >= 1 is a tie, resolved fail-safe
    assert classify(train, cfg, embed(LEX, "heartbeat intrusion"), at(0)) is TriageLabel.SUSPICIOUS


def test_weight_flips_minority_vote():
    train = two_cluster_train(n_benign=6, n_susp=2)
    # query overlaps both clusters; k=5 picks 2 suspicious + 3 benign
    query = embed(LEX, "heartbeat status intrusion breach")
    low = KnnConfig(k=5, malicious_weight=1.0)
    high = KnnConfig(k=5, malicious_weight=5.0)
    assert classify(train, low, query, at(0)) is TriageLabel.BENIGN
    assert classify(train, high, query, at(0)) is TriageLabel.SUSPICIOUS


def test_window_restricts_candidates():
    cfg = KnnConfig(k=1, malicious_weight=1.0, window=timedelta(minutes=30))
    train = [
        example("old-s", "heartbeat intrusion", TriageLabel.SUSPICIOUS, -3600),
        example("new-b", "heartbeat status", TriageLabel.BENIGN, -60),
    ]
    # the suspicious example matches better but sits outside the window
    label = classify(train, cfg, embed(LEX, "heartbeat intrusion"), at(0))
    assert label is TriageLabel.BENIGN


def test_sparse_window_falls_back_to_full_set():
    cfg = KnnConfig(k=2, malicious_weight=1.0, window=timedelta(minutes=30))
    train = [
        example("old-s1", "heartbeat intrusion", TriageLabel.SUSPICIOUS, -3600),
        example("old-s2", "intrusion breach", TriageLabel.SUSPICIOUS, -3700),
        example("new-b", "heartbeat status", TriageLabel.BENIGN, -60),
    ]
    # only one in-window candidate < k=2: all three become candidates
    label = classify(train, cfg, embed(LEX, "intrusion breach"), at(0))
    assert label is TriageLabel.SUSPICIOUS


def test_neighbor_ties_break_by_timestamp_then_id():
    cfg = KnnConfig(k=1, malicious_weight=1.0)
    train = [
        example("zz", "heartbeat status", TriageLabel.SUSPICIOUS, -10),
        example("aa", "heartbeat status", TriageLabel.BENIGN, -5),
    ]
    # identical similarity; earlier timestamp (zz) is the neighbor
    assert classify(train, cfg, embed(LEX, "heartbeat status"), at(0)) is TriageLabel.SUSPICIOUS
    train_same_ts = [
        example("zz", "heartbeat status", TriageLabel.SUSPICIOUS, -10),
        example("aa", "heartbeat status", TriageLabel.BENIGN, -10),
    ]
    # same timestamp too: lexicographically smaller id wins
    assert classify(train_same_ts, cfg, embed(LEX, "heartbeat status"), at(0)) is TriageLabel.BENIGN


def test_assign_folds_deterministic_and_stratified():
    train = two_cluster_train(n_benign=10, n_susp=5)
    a = assign_folds(train, folds=5, seed=42)
    b = assign_folds(list(reversed(train)), folds=5, seed=42)
    assert a == b  # input order does not matter
    assert assign_folds(train, folds=5, seed=43) != a
    for label in TriageLabel:
        ids = [ex.example_id for ex in train if ex.label is label]
        sizes = [sum(1 for i in ids if a[i] == f) for f in range(5)]
        assert max(sizes) - min(sizes) <= 1  # per-class round-robin balance


def test_assign_folds_matches_documented_recipe():
    train = two_cluster_train(n_benign=7, n_susp=4)
    by_label = {
        label: [ex.example_id for ex in train if ex.label is label]
        for label in TriageLabel
    }
    assert assign_folds(train, folds=3, seed=9) == oracles.oracle_folds(by_label, 3, 9)


def test_evaluate_cv_validation():
    train = two_cluster_train()
    with pytest.raises(ValueError):
        evaluate_cv(train, KnnConfig(), folds=1)
    with pytest.raises(TooFewExamples):
        evaluate_cv(train[:3], KnnConfig(), folds=4)


def test_evaluate_cv_deterministic_and_order_invariant():
    train = two_cluster_train(n_benign=8, n_susp=4)
    cfg = KnnConfig(k=3, malicious_weight=2.0)
    m1 = evaluate_cv(train, cfg, folds=4, seed=7)
    m2 = evaluate_cv(list(reversed(train)), cfg, folds=4, seed=7)
    assert m1 == m2
    shuffled = list(train)
    random.Random(0).shuffle(shuffled)
    assert evaluate_cv(shuffled, cfg, folds=4, seed=7) == m1


def test_evaluate_cv_counts_cover_all_examples():
    train = two_cluster_train(n_benign=8, n_susp=4)
    m = evaluate_cv(train, KnnConfig(k=3), folds=4, seed=0)
    assert m.tp + m.fp + m.tn + m.fn == len(train)
    assert m.tp + m.fn == 4  # every suspicious example judged once
    assert m.tn + m.fp == 8


def test_evaluate_cv_matches_oracle():
    cfg, train, _ = oracles.gen_knn_instance(5)
    got = evaluate_cv(train, cfg, folds=5, seed=3).to_dict()
    assert got == oracles.oracle_cv(train, cfg, folds=5, seed=3)


def test_metrics_arithmetic():
    m = Metrics.from_confusion(tp=90, fp=10, tn=880, fn=20)
    assert m.precision == 90 / 100
    assert m.recall == 90 / 110
    assert m.f1 == 2 * m.precision * m.recall / (m.precision + m.recall)
    assert m.to_dict()["confusion"] == {"tp": 90, "fp": 10, "tn": 880, "fn": 20}


def test_metrics_degenerate_cases():
    assert Metrics.from_confusion(0, 0, 10, 0).precision == 0.0
    assert Metrics.from_confusion(0, 0, 10, 0).f1 == 0.0
    assert f1_score(0.0, 0.0) == 0.0
    assert f1_score(1.0, 1.0) == 1.0


def test_fit_weight_balances_classes():
    train = two_cluster_train(n_benign=6, n_susp=3)
    assert fit_weight(train) == 2.0
    balanced = two_cluster_train(n_benign=3, n_susp=3)
    assert fit_weight(balanced) == 1.0
    inverted = two_cluster_train(n_benign=2, n_susp=4)
    assert fit_weight(inverted) == 1.0  # clamped at 1


def test_fit_weight_single_class_raises():
    train = [ex for ex in two_cluster_train() if ex.label is TriageLabel.BENIGN]
    with pytest.raises(SingleClassData):
        fit_weight(train)
