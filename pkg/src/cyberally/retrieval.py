"""Graph-backed context retrieval for suggestion prompts.

Given an alert's embedding, rank indexed graph nodes by cosine similarity
per layer, keep the best few from each, and attach a rendered neighborhood
excerpt to every seed. Everything is deterministic: ties break on node id
and excerpts are fully sorted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alerts import Alert
from .embedding import EmbeddingVector, cosine_similarity
from .graph import LayeredGraph, NodeKind, Subgraph, alert_node_id, neighborhood


class RetrievalConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RetrievalConfig:
    top_k_static: int = 5
    top_k_dynamic: int = 3
    hops: int = 1
    min_score: float = 0.3

    def __post_init__(self):
        if self.top_k_static < 0 or self.top_k_dynamic < 0:
            raise RetrievalConfigError("top_k values must be >= 0")
        if self.top_k_static + self.top_k_dynamic < 1:
            raise RetrievalConfigError("at least one layer budget must be positive")
        if self.hops < 0:
            raise RetrievalConfigError("hops must be >= 0")
        if not -1.0 <= self.min_score <= 1.0:
            raise RetrievalConfigError("min_score must be within [-1, 1]")


def render_excerpt(subgraph: Subgraph) -> str:
    """Stable plain-text rendering of a neighborhood: one
    ``kind label: description`` line per node (sorted by id), then one
    ``src -relation-> dst`` line per edge (sorted by src, dst, relation)."""
    lines = [f"{n.kind.value} {n.label}: {n.description}" for n in subgraph.nodes]
    lines.extend(f"{e.src} -{e.relation.value}-> {e.dst}" for e in subgraph.edges)
    return "\n".join(lines)


@dataclass(frozen=True)
class ContextItem:
    node_id: str
    kind: str
    label: str
    score: float
    excerpt: str

    def to_record(self) -> dict:
        return {
            "node_id": self.node_id,
            "kind": self.kind,
            "label": self.label,
            "score": self.score,
            "excerpt": self.excerpt,
        }


@dataclass
class ContextBundle:
    """What retrieval hands to prompt assembly: per-layer scored items, each
    carrying its own neighborhood excerpt, plus the ids of prior alert
    events found among the dynamic items."""

    alert_id: str
    static_items: list[ContextItem] = field(default_factory=list)
    dynamic_items: list[ContextItem] = field(default_factory=list)
    related_alerts: list[str] = field(default_factory=list)
    skipped_zero_vector: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.static_items and not self.dynamic_items

    def to_record(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "static_items": [i.to_record() for i in self.static_items],
            "dynamic_items": [i.to_record() for i in self.dynamic_items],
            "related_alerts": list(self.related_alerts),
            "skipped_zero_vector": self.skipped_zero_vector,
        }


def _rank_layer(
    g: LayeredGraph,
    query: EmbeddingVector,
    node_ids: list[str],
    k: int,
    min_score: float,
    exclude: set[str],
) -> list[tuple[float, str]]:
    scored: list[tuple[float, str]] = []
    for node_id in node_ids:
        if node_id in exclude:
            continue
        vec = g.embedding_index.get(node_id)
        if vec is None:
            continue
        score = cosine_similarity(query, vec)
        if score is None or score < min_score:
            continue
        scored.append((score, node_id))
    # higher score first, ties to the lexicographically smaller id
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return scored[:k]


def retrieve(
    g: LayeredGraph,
    cfg: RetrievalConfig,
    alert: Alert,
    vec: EmbeddingVector,
) -> ContextBundle:
    """Rank indexed nodes against the alert's embedding, per layer.

    Static and dynamic layers are ranked independently so fresh alert events
    cannot crowd out infrastructure knowledge (or vice versa). Nodes scoring
    below ``min_score`` are dropped, the alert's own event node is excluded,
    and each kept seed carries a rendered ``hops``-neighborhood excerpt.
    Zero-coverage alerts have no similarity to anything: the bundle comes
    back empty and flagged."""
    if vec.is_zero:
        return ContextBundle(alert_id=alert.id, skipped_zero_vector=True)

    exclude = {alert_node_id(alert.id)}
    indexed = list(g.embedding_index)
    by_layer: dict[str, list[str]] = {"static": [], "dynamic": []}
    for node_id in indexed:
        by_layer[g.layer_of(node_id)].append(node_id)

    def items_for(layer: str, k: int) -> list[ContextItem]:
        ranked = _rank_layer(g, vec, by_layer[layer], k, cfg.min_score, exclude)
        items = []
        for score, node_id in ranked:
            node = g.node(node_id)
            excerpt = render_excerpt(neighborhood(g, node_id, cfg.hops))
            items.append(
                ContextItem(
                    node_id=node_id,
                    kind=node.kind.value,
                    label=node.label,
                    score=score,
                    excerpt=excerpt,
                )
            )
        return items

    static_items = items_for("static", cfg.top_k_static)
    dynamic_items = items_for("dynamic", cfg.top_k_dynamic)
    related = [
        str(g.node(i.node_id).attrs.get("alert_id", ""))
        for i in dynamic_items
        if g.node(i.node_id).kind is NodeKind.ALERT_EVENT
    ]
    return ContextBundle(
        alert_id=alert.id,
        static_items=static_items,
        dynamic_items=dynamic_items,
        related_alerts=[r for r in related if r],
    )
