"""
Weighted nearest-neighbor triage
================================

"""

# Binary triage over labeled history: each alert is Benign or Suspicious by a
# weighted vote of its nearest neighbors inside a recency window. Weighting
# the Suspicious votes trades precision for recall without retraining.

from datetime import timedelta

from cyberally.classifier import KnnConfig, classify, evaluate_cv, fit_weight
from cyberally.config import DEMO_TRAINING_FILENAME, bundled_data_dir
from cyberally.embedding import builtin_lexicon, embed
from cyberally.evaluation import load_labeled_corpus

lex = builtin_lexicon()
training = load_labeled_corpus(bundled_data_dir() / DEMO_TRAINING_FILENAME, lex)
print("training examples:", len(training))

# "auto" weighting in the service maps to this: the benign/suspicious ratio,
# clamped to at least 1.
weight = fit_weight(training)
print("fitted weight: %.1f" % weight)

# The demo corpus spans one hour, so widen the recency window to keep every
# example eligible. Production configs keep this at 30 minutes.
cfg = KnnConfig(k=5, malicious_weight=weight, window=timedelta(hours=2))

# Classify as of the end of the training stream. Querying far in the future
# would leave the window empty and the vote would fall back to full history.
as_of = max(ex.timestamp for ex in training)
for text in (
    "ssh brute force login attempts on admin account",
    "nginx web server connection established",
):
    label = classify(training, cfg, embed(lex, text), as_of)
    print(f"{label.value:>10}  <-  {text}")

# Stratified cross-validation reports precision/recall/f1 from one pooled
# confusion matrix, so the numbers are comparable across weights.
for w in (1.0, 2.0, 5.0):
    metrics = evaluate_cv(training, KnnConfig(k=5, malicious_weight=w), folds=4, seed=0)
    print(
        f"weight {w:>4}: precision {metrics.precision:.3f}"
        f" recall {metrics.recall:.3f} f1 {metrics.f1:.3f}"
    )
