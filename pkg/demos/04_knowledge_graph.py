"""
Layered incident knowledge graph
================================

"""

from cyberally.alerts import parse_alert
from cyberally.config import DEMO_GRAPH_FILENAME, bundled_data_dir
from cyberally.embedding import builtin_lexicon, embed
from cyberally.graph import StaticLayerSealed, GraphNode, NodeKind, load_static, neighborhood, record_alert

lex = builtin_lexicon()

# The static layer ships as YAML: hosts, rules, technique references, notes.
# Loading it also builds the embedding index over each node's text and seals
# the layer against mutation.
g = load_static(bundled_data_dir() / DEMO_GRAPH_FILENAME, lex)
print("static nodes:", len(list(g.static_node_ids())))
print("indexed for retrieval:", len(g.embedding_index))

try:
    g.add_static_node(GraphNode(id="x", kind=NodeKind.NOTE, label="x", description="x"))
except StaticLayerSealed as exc:
    print("sealed:", exc)

# Alerts land in the mutable dynamic layer, wired to their host and to the
# running event note.
alert = parse_alert({
    "id": "evt-77",
    "timestamp": "2025-06-01T12:00:00+00:00",
    "rule": {"id": "rule-5710", "level": 9, "description": "sshd brute force attempt"},
    "full_log": "",
    "agent": {"name": "web-01"},
})
node_id = record_alert(g, alert, embed(lex, alert.title))
print("recorded:", node_id)

# Neighborhoods are breadth-first in either edge direction and come back
# deterministically sorted, which keeps prompt assembly reproducible.
for hops in (0, 1, 2):
    sub = neighborhood(g, node_id, hops)
    print(f"hops={hops}: {len(sub.nodes)} nodes, {len(sub.edges)} edges")

# Snapshots isolate card generation from concurrent writes.
frozen = g.snapshot()
print("snapshot sees the alert:", frozen.has_node(node_id))
