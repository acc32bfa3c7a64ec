"""
Parsing wire records and embedding their text
=============================================

"""

# A SIEM ships alerts as JSON. parse_alert accepts a dict or a raw JSON line
# and validates the envelope: timestamp, rule id, level 0..15, agent.
from cyberally.alerts import alert_text, parse_alert

record = {
    "id": "evt-000001",
    "timestamp": "2025-06-01T12:00:00+00:00",
    "rule": {"id": "rule-5710", "level": 7, "description": "sshd: brute force trying to get access"},
    "full_log": "Jun  1 12:00:00 web-01 sshd[9418]: Failed password for root",
    "agent": {"name": "web-01"},
}
alert = parse_alert(record)
print("parsed:", alert.id, alert.priority, alert.rule_id)

# Records may omit the id; a stable one is derived from the content hash.
anonymous = dict(record)
del anonymous["id"]
print("derived id:", parse_alert(anonymous).id)

# The embedding is the mean of the lexicon vectors of the tokens in the
# title plus log line. Coverage reports the fraction of tokens that hit.
from cyberally.embedding import builtin_lexicon, cosine_similarity, embed

lex = builtin_lexicon()
vec = embed(lex, alert_text(alert))
print("dimension:", len(vec.values), "coverage: %.2f" % vec.coverage)

# Cosine similarity is the comparison primitive used everywhere downstream.
other = embed(lex, "sshd authentication failure for root from external host")
print("similarity: %.4f" % cosine_similarity(vec, other))

# Text with no lexicon hits embeds to the zero vector; cosine against it is
# undefined, so the similarity is None and callers must branch.
oov = embed(lex, "zzz qqq xyzzy")
print("zero-coverage similarity:", cosine_similarity(vec, oov))
