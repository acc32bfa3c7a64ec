"""
Sliding-window alert deduplication
==================================

"""

from datetime import timedelta

from cyberally.alerts import alert_text, parse_alert
from cyberally.dedup import DedupConfig, DedupFilter
from cyberally.embedding import builtin_lexicon, embed

lex = builtin_lexicon()


def wire(i, minute, text):
    return parse_alert({
        "id": f"evt-{i}",
        "timestamp": f"2025-06-01T12:{minute:02d}:00+00:00",
        "rule": {"id": "rule-1", "level": 7, "description": text},
        "full_log": "",
        "agent": {"name": "web-01"},
    })


# Keep a five-minute window; anything at least 95% similar to a remembered
# reference is a duplicate.
filt = DedupFilter(DedupConfig(threshold=0.95, window=timedelta(minutes=5)))

stream = [
    wire(1, 0, "sshd brute force attempt detected"),
    wire(2, 1, "sshd brute force attempt detected"),   # exact repeat
    wire(3, 2, "web server heartbeat status normal"),  # unrelated
    wire(4, 9, "sshd brute force attempt detected"),   # repeat, but window expired
]
for alert in stream:
    verdict = filt.check_and_admit(alert, embed(lex, alert_text(alert)))
    sim = "None" if verdict.similarity is None else f"{verdict.similarity:.4f}"
    print(f"{alert.id}: duplicate={verdict.is_duplicate} matched={verdict.matched_id} sim={sim}")

# evt-2 matches evt-1; by evt-4 the reference has aged out of the window, so
# the same text is admitted again as a fresh alert.
print("references remembered:", filt.reference_count)
