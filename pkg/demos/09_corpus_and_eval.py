"""
Seeded corpora and the evaluation suite
=======================================

"""

import tempfile
from datetime import timedelta
from pathlib import Path

from cyberally.embedding import builtin_lexicon
from cyberally.evaluation import (
    CorpusSpec,
    generate_corpus,
    render_dedup_table,
    render_knn_table,
    run_classifier_eval,
    run_dedup_eval,
)

# A corpus spec pins totals and distinct alert types per priority. Output
# bytes are a pure function of (spec, lexicon): distinct type texts are
# rejection-sampled to stay dissimilar, duplicates are exact repeats placed
# inside the dedup window of their representative.
spec = CorpusSpec(
    seed=42,
    per_priority_distinct={5: 12, 9: 6},
    per_priority_total={5: 80, 9: 25},
    malicious_fraction=0.3,
    duration=timedelta(hours=8),
)
lex = builtin_lexicon()

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "corpus"
    generate_corpus(spec, lex, out)

    # Streaming the corpus through the dedup filter should recover exactly
    # the distinct counts.
    print(render_dedup_table(run_dedup_eval(out, lex)))

    # Cross-validated triage metrics per vote weight; recall rises with the
    # weight while precision pays for it.
    results = run_classifier_eval(out, lex, weights=(1.0, 5.0), folds=5, k=5)
    print()
    print(render_knn_table(results))

# The same two evaluations are exposed as `cyberally eval dedup` and
# `cyberally eval knn`; `cyberally eval gen` writes a corpus to disk.
