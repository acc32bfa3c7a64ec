"""
Per-layer context retrieval for an alert
========================================

"""

from cyberally.alerts import alert_text, parse_alert
from cyberally.config import DEMO_GRAPH_FILENAME, bundled_data_dir
from cyberally.embedding import builtin_lexicon, embed
from cyberally.graph import load_static, record_alert
from cyberally.retrieval import RetrievalConfig, retrieve

lex = builtin_lexicon()
g = load_static(bundled_data_dir() / DEMO_GRAPH_FILENAME, lex)


def land(i, text):
    alert = parse_alert({
        "id": f"evt-{i}",
        "timestamp": f"2025-06-01T12:0{i}:00+00:00",
        "rule": {"id": "rule-5710", "level": 9, "description": text},
        "full_log": "",
        "agent": {"name": "web-01"},
    })
    record_alert(g, alert, embed(lex, alert_text(alert)))
    return alert


land(1, "sshd brute force trying to get access")
land(2, "multiple failed login attempts on web server")
query = land(3, "sshd failed password for root brute force")

# Ranking is per layer: curated static knowledge competes only with itself,
# recent alert events only with each other. Scores below min_score are cut.
cfg = RetrievalConfig(top_k_static=3, top_k_dynamic=2, hops=1, min_score=0.3)
bundle = retrieve(g, cfg, query, embed(lex, alert_text(query)))

print("static context:")
for item in bundle.static_items:
    print(f"  {item.score:.3f}  {item.node_id}  [{item.kind}] {item.label}")
print("dynamic context:")
for item in bundle.dynamic_items:
    print(f"  {item.score:.3f}  {item.node_id}")
print("related alerts:", bundle.related_alerts)

# Each item carries a neighborhood excerpt: node lines, then edge lines.
print("\nexcerpt for the top static hit:")
print(bundle.static_items[0].excerpt)
