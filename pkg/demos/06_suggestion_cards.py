"""
Suggestion cards from a pluggable chat provider
===============================================

"""

from cyberally.alerts import alert_text, parse_alert
from cyberally.config import DEMO_GRAPH_FILENAME, bundled_data_dir
from cyberally.embedding import builtin_lexicon, embed
from cyberally.graph import load_static, record_alert
from cyberally.retrieval import RetrievalConfig, retrieve
from cyberally.suggestions import (
    ScriptedProvider,
    build_prompt,
    default_template,
    generate_card,
    parse_response,
)

lex = builtin_lexicon()
g = load_static(bundled_data_dir() / DEMO_GRAPH_FILENAME, lex)
alert = parse_alert({
    "id": "evt-9",
    "timestamp": "2025-06-01T12:00:00+00:00",
    "rule": {"id": "rule-5710", "level": 9, "description": "sshd brute force trying to get access"},
    "full_log": "",
    "agent": {"name": "web-01"},
})
vec = embed(lex, alert_text(alert))
record_alert(g, alert, vec)
bundle = retrieve(g, RetrievalConfig(), alert, vec)

# The prompt is system preamble + alert block + per-layer context sections.
# Oversized context is dropped lowest-score-first until the prompt fits, and
# every drop is recorded in the card's digest for audit.
request = build_prompt(default_template(), alert, bundle)
print("prompt chars:", len(request.messages[0]["content"]) + len(request.messages[1]["content"]))

# Any chat backend works through the two-method provider interface. The
# scripted provider is the offline default; HttpChatProvider speaks the
# usual chat-completions wire format with retry and backoff.
provider = ScriptedProvider()
card = generate_card(provider, default_template(), alert, bundle)
print("\n" + card.render())

# Replies must carry three sections in order; a malformed reply still
# produces a card, marked degraded, so the analyst sees the raw text.
broken = parse_response(alert.id, "model rambled with no sections at all")
print("\ndegraded:", broken.degraded, "|", broken.summary)
