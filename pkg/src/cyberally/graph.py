"""Layered property graph: sealed static knowledge plus a live dynamic layer.

The static layer holds infrastructure and prior-engagement knowledge loaded
from a graph file and is immutable after sealing. The dynamic layer accrues
the current engagement's alert events and tickets. Edges may cross layers,
which is how live alerts attach to static infrastructure. Every node with
lexicon-covered text is indexed by its embedding for retrieval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import yaml

from .alerts import Alert, alert_text
from .embedding import EmbeddingVector, Lexicon, embed


class GraphError(ValueError):
    pass


class MalformedGraphFile(GraphError):
    pass


class DanglingEdge(GraphError):
    pass


class DuplicateNodeId(GraphError):
    pass


class StaticLayerSealed(GraphError):
    """Raised by any mutation attempt on the sealed static layer."""


class UnknownNode(GraphError):
    pass


class UnknownAlertEvent(GraphError):
    pass


class NodeKind(Enum):
    HOST = "Host"
    SERVICE = "Service"
    RULE = "Rule"
    ALERT_EVENT = "AlertEvent"
    TICKET = "Ticket"
    TECHNIQUE_REF = "TechniqueRef"
    PAST_INCIDENT = "PastIncident"
    NOTE = "Note"


class Relation(Enum):
    CONNECTS_TO = "ConnectsTo"
    HOSTS = "Hosts"
    TRIGGERED = "Triggered"
    MITIGATES = "Mitigates"
    RELATES_TO = "RelatesTo"
    CREATED_FROM = "CreatedFrom"
    OBSERVED_DURING = "ObservedDuring"


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: NodeKind
    label: str
    description: str
    attrs: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "label": self.label,
            "description": self.description,
            "attrs": dict(self.attrs),
        }


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    relation: Relation

    def to_record(self) -> dict:
        return {"src": self.src, "dst": self.dst, "relation": self.relation.value}


@dataclass
class Subgraph:
    """Deterministically ordered slice of the graph: nodes sorted by id,
    edges by (src, dst, relation)."""

    nodes: list[GraphNode]
    edges: list[GraphEdge]


_EVENT_NOTE_ID = "event-current"


class LayeredGraph:
    """Two-layer store with an embedding index over node text.

    Single writer, many readers: the orchestrator serializes record_* calls;
    reads against a snapshot() are stable under later writes.
    """

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon
        self._static_nodes: dict[str, GraphNode] = {}
        self._static_edges: list[GraphEdge] = []
        self._dynamic_nodes: dict[str, GraphNode] = {}
        self._dynamic_edges: list[GraphEdge] = []
        self.embedding_index: dict[str, EmbeddingVector] = {}
        self._sealed = False
        self.version = 0
        self.warnings: list[str] = []

    # -- lookups ------------------------------------------------------------

    @property
    def sealed(self) -> bool:
        return self._sealed

    def node(self, node_id: str) -> GraphNode:
        found = self._static_nodes.get(node_id) or self._dynamic_nodes.get(node_id)
        if found is None:
            raise UnknownNode(node_id)
        return found

    def has_node(self, node_id: str) -> bool:
        return node_id in self._static_nodes or node_id in self._dynamic_nodes

    def static_node_ids(self) -> list[str]:
        return list(self._static_nodes)

    def dynamic_node_ids(self) -> list[str]:
        return list(self._dynamic_nodes)

    def layer_of(self, node_id: str) -> str:
        if node_id in self._static_nodes:
            return "static"
        if node_id in self._dynamic_nodes:
            return "dynamic"
        raise UnknownNode(node_id)

    def all_edges(self) -> list[GraphEdge]:
        return self._static_edges + self._dynamic_edges

    def node_count(self) -> int:
        return len(self._static_nodes) + len(self._dynamic_nodes)

    # -- construction -------------------------------------------------------

    def _index_text(self, node: GraphNode) -> str:
        return node.label + " " + node.description

    def _reindex(self, node: GraphNode) -> None:
        vec = embed(self.lexicon, self._index_text(node))
        if vec.coverage > 0:
            self.embedding_index[node.id] = vec
        else:
            self.embedding_index.pop(node.id, None)

    def add_static_node(self, node: GraphNode) -> None:
        if self._sealed:
            raise StaticLayerSealed("static layer is sealed")
        if self.has_node(node.id):
            raise DuplicateNodeId(node.id)
        self._static_nodes[node.id] = node
        self._reindex(node)
        self.version += 1

    def add_static_edge(self, edge: GraphEdge) -> None:
        if self._sealed:
            raise StaticLayerSealed("static layer is sealed")
        self._check_edge(edge)
        self._static_edges.append(edge)
        self.version += 1

    def seal_static(self) -> None:
        self._sealed = True

    def add_dynamic_node(self, node: GraphNode) -> None:
        if self.has_node(node.id):
            raise DuplicateNodeId(node.id)
        self._dynamic_nodes[node.id] = node
        self._reindex(node)
        self.version += 1

    def add_dynamic_edge(self, edge: GraphEdge) -> None:
        self._check_edge(edge)
        self._dynamic_edges.append(edge)
        self.version += 1

    def update_dynamic_node(
        self,
        node_id: str,
        label: str | None = None,
        description: str | None = None,
        attrs: dict | None = None,
    ) -> GraphNode:
        """Replace fields of a dynamic node and recompute its index entry.
        Static nodes cannot be updated."""
        if node_id in self._static_nodes:
            raise StaticLayerSealed(f"cannot update static node {node_id}")
        old = self._dynamic_nodes.get(node_id)
        if old is None:
            raise UnknownNode(node_id)
        node = GraphNode(
            id=old.id,
            kind=old.kind,
            label=old.label if label is None else label,
            description=old.description if description is None else description,
            attrs=dict(old.attrs) if attrs is None else dict(attrs),
        )
        self._dynamic_nodes[node_id] = node
        self._reindex(node)
        self.version += 1
        return node

    def _check_edge(self, edge: GraphEdge) -> None:
        if edge.src == edge.dst:
            raise MalformedGraphFile(f"self-loop on {edge.src}")
        for endpoint in (edge.src, edge.dst):
            if not self.has_node(endpoint):
                raise DanglingEdge(f"edge endpoint {endpoint} does not exist")

    # -- snapshots ------------------------------------------------------------

    def snapshot(self) -> "LayeredGraph":
        """Shallow-copy view: nodes are immutable and shared, containers are
        copied, so later writes to this graph do not show through."""
        view = LayeredGraph.__new__(LayeredGraph)
        view.lexicon = self.lexicon
        view._static_nodes = dict(self._static_nodes)
        view._static_edges = list(self._static_edges)
        view._dynamic_nodes = dict(self._dynamic_nodes)
        view._dynamic_edges = list(self._dynamic_edges)
        view.embedding_index = dict(self.embedding_index)
        view._sealed = True
        view.version = self.version
        view.warnings = list(self.warnings)
        return view

    def save_snapshot(self, path) -> None:
        """Write both layers in the graph-file format plus a layer tag per
        node and edge."""
        payload = {
            "nodes": [
                {**self._static_nodes[i].to_record(), "layer": "static"}
                for i in self._static_nodes
            ]
            + [
                {**self._dynamic_nodes[i].to_record(), "layer": "dynamic"}
                for i in self._dynamic_nodes
            ],
            "edges": [
                {**e.to_record(), "layer": "static"} for e in self._static_edges
            ]
            + [{**e.to_record(), "layer": "dynamic"} for e in self._dynamic_edges],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _parse_node(raw: dict) -> GraphNode:
    if not isinstance(raw, dict) or "id" not in raw:
        raise MalformedGraphFile(f"bad node record: {raw!r}")
    try:
        kind = NodeKind(raw.get("kind"))
    except ValueError:
        raise MalformedGraphFile(f"unknown node kind: {raw.get('kind')!r}") from None
    description = raw.get("description", "")
    if not description:
        raise MalformedGraphFile(f"node {raw['id']} has no description")
    attrs = raw.get("attrs") or {}
    if kind is NodeKind.TECHNIQUE_REF and "technique_id" not in attrs:
        raise MalformedGraphFile(f"TechniqueRef {raw['id']} lacks attrs.technique_id")
    return GraphNode(
        id=str(raw["id"]),
        kind=kind,
        label=str(raw.get("label", raw["id"])),
        description=str(description),
        attrs=dict(attrs),
    )


def _parse_edge(raw: dict) -> GraphEdge:
    if not isinstance(raw, dict) or "src" not in raw or "dst" not in raw:
        raise MalformedGraphFile(f"bad edge record: {raw!r}")
    try:
        relation = Relation(raw.get("relation"))
    except ValueError:
        raise MalformedGraphFile(f"unknown relation: {raw.get('relation')!r}") from None
    return GraphEdge(src=str(raw["src"]), dst=str(raw["dst"]), relation=relation)


def load_static(path, lexicon: Lexicon) -> LayeredGraph:
    """Load the static layer from a graph file and seal it.

    The file is a YAML/JSON document with top-level ``nodes`` and ``edges``
    lists. Unknown kinds/relations, duplicate ids, dangling or self-loop
    edges are rejected.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise MalformedGraphFile(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise MalformedGraphFile(f"{path}: expected top-level nodes/edges lists")

    g = LayeredGraph(lexicon)
    for raw in doc["nodes"]:
        g.add_static_node(_parse_node(raw))
    for raw in doc.get("edges") or []:
        g.add_static_edge(_parse_edge(raw))
    g.seal_static()
    return g


# -- dynamic recording -------------------------------------------------------

def alert_node_id(alert_id: str) -> str:
    return f"alert-{alert_id}"


def _find_host(g: LayeredGraph, agent: str) -> GraphNode | None:
    matches = [
        g.node(i)
        for i in list(g.static_node_ids()) + list(g.dynamic_node_ids())
        if g.node(i).kind is NodeKind.HOST and g.node(i).label == agent
    ]
    if not matches:
        return None
    return min(matches, key=lambda n: n.id)


def _ensure_event_note(g: LayeredGraph) -> GraphNode:
    if g.has_node(_EVENT_NOTE_ID):
        return g.node(_EVENT_NOTE_ID)
    note = GraphNode(
        id=_EVENT_NOTE_ID,
        kind=NodeKind.NOTE,
        label="current-event",
        description="anchor for the ongoing exercise timeline",
    )
    g.add_dynamic_node(note)
    return note


def record_alert(g: LayeredGraph, alert: Alert, vec: EmbeddingVector) -> str:
    """Add an admitted suspicious alert to the dynamic layer.

    Creates the AlertEvent node, a Triggered edge from the agent's Host node
    when one exists (otherwise a warning is recorded), and an ObservedDuring
    edge to the current-event note.
    """
    node_id = alert_node_id(alert.id)
    node = GraphNode(
        id=node_id,
        kind=NodeKind.ALERT_EVENT,
        label=alert.title,
        description=alert_text(alert),
        attrs={
            "alert_id": alert.id,
            "priority": alert.priority,
            "rule_id": alert.rule_id,
            "agent": alert.agent,
        },
    )
    g.add_dynamic_node(node)
    if vec.coverage > 0:
        g.embedding_index[node_id] = vec
    host = _find_host(g, alert.agent)
    if host is not None:
        g.add_dynamic_edge(GraphEdge(src=host.id, dst=node_id, relation=Relation.TRIGGERED))
    else:
        g.warnings.append(f"no Host node labeled {alert.agent!r} for alert {alert.id}")
    note = _ensure_event_note(g)
    g.add_dynamic_edge(GraphEdge(src=node_id, dst=note.id, relation=Relation.OBSERVED_DURING))
    return node_id


def record_ticket(
    g: LayeredGraph,
    ticket_id: str,
    alert_id: str,
    title: str,
    description: str,
) -> str:
    """Add a created case ticket to the dynamic layer, linked CreatedFrom its
    alert event. The alert must have been recorded first."""
    event_id = alert_node_id(alert_id)
    if not g.has_node(event_id):
        raise UnknownAlertEvent(f"no recorded alert event for alert {alert_id}")
    node_id = f"ticket-{ticket_id}"
    node = GraphNode(
        id=node_id,
        kind=NodeKind.TICKET,
        label=title,
        description=description,
        attrs={"ticket_id": ticket_id, "alert_id": alert_id},
    )
    g.add_dynamic_node(node)
    g.add_dynamic_edge(GraphEdge(src=node_id, dst=event_id, relation=Relation.CREATED_FROM))
    return node_id


def neighborhood(g: LayeredGraph, node_id: str, hops: int) -> Subgraph:
    """Induced subgraph of all nodes within ``hops`` edges in either
    direction, across both layers. Breadth-first with id-sorted frontiers."""
    if not g.has_node(node_id):
        raise UnknownNode(node_id)
    if hops < 0:
        raise ValueError("hops must be >= 0")

    adjacency: dict[str, set[str]] = {}
    edges = g.all_edges()
    for e in edges:
        adjacency.setdefault(e.src, set()).add(e.dst)
        adjacency.setdefault(e.dst, set()).add(e.src)

    visited = {node_id}
    frontier = [node_id]
    for _ in range(hops):
        nxt: set[str] = set()
        for nid in frontier:
            nxt.update(adjacency.get(nid, set()) - visited)
        visited.update(nxt)
        frontier = sorted(nxt)
        if not frontier:
            break

    nodes = sorted((g.node(i) for i in visited), key=lambda n: n.id)
    induced = [e for e in edges if e.src in visited and e.dst in visited]
    induced.sort(key=lambda e: (e.src, e.dst, e.relation.value))
    return Subgraph(nodes=nodes, edges=induced)
