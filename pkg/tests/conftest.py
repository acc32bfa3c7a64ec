"""Shared fixtures: a tiny one-hot lexicon with exactly predictable cosines,
alert factories, and a fully offline pipeline wired with fakes."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from cyberally.alerts import Alert, TriageLabel, format_timestamp
from cyberally.cases import FakeCaseBackend
from cyberally.classifier import KnnConfig, LabeledExample
from cyberally.embedding import EmbeddingVector, Lexicon, builtin_lexicon, embed
from cyberally.graph import GraphEdge, GraphNode, LayeredGraph, NodeKind, Relation
from cyberally.pipeline import Pipeline
from cyberally.suggestions import ScriptedProvider

T0 = datetime(2025, 6, 1, 12, 0, 0, tzinfo=timezone.utc)

BENIGN_TOKENS = ("heartbeat", "status", "ok", "ping", "routine", "backup")
SUSPICIOUS_TOKENS = ("intrusion", "breach", "exploit", "attack", "payload", "shellcode")


def at(seconds: float) -> datetime:
    return T0 + timedelta(seconds=seconds)


def make_alert(
    alert_id: str = "a1",
    ts: datetime | float = 0.0,
    title: str = "heartbeat status ok",
    priority: int = 7,
    rule_id: str = "r-100",
    agent: str = "web-01",
    full_log: str = "",
) -> Alert:
    when = ts if isinstance(ts, datetime) else at(ts)
    return Alert(
        id=alert_id,
        timestamp=when,
        priority=priority,
        rule_id=rule_id,
        title=title,
        full_log=full_log,
        agent=agent,
    )


def make_record(
    title: str,
    ts: datetime | float = 0.0,
    alert_id: str | None = None,
    priority: int = 7,
    rule_id: str = "r-100",
    agent: str = "web-01",
    full_log: str = "",
) -> dict:
    when = ts if isinstance(ts, datetime) else at(ts)
    record = {
        "timestamp": format_timestamp(when),
        "rule": {"id": rule_id, "level": priority, "description": title},
        "full_log": full_log,
        "agent": {"name": agent},
    }
    if alert_id is not None:
        record["id"] = alert_id
    return record


def axis_lexicon(extra: tuple[str, ...] = ()) -> Lexicon:
    """One-hot axis per token: cosine between texts is exactly the overlap
    structure of their token sets, which makes expected scores computable by
    hand."""
    tokens = BENIGN_TOKENS + SUSPICIOUS_TOKENS + tuple(extra)
    dim = len(tokens)
    entries = {t: np.eye(dim)[i] for i, t in enumerate(tokens)}
    return Lexicon(dimension=dim, entries=entries)


def make_training(lex: Lexicon, n_each: int = 6, spread_s: float = 60.0) -> list[LabeledExample]:
    """Benign and suspicious examples on disjoint axes near T0."""
    out = []
    for i in range(n_each):
        toks = BENIGN_TOKENS[i % len(BENIGN_TOKENS)], BENIGN_TOKENS[(i + 1) % len(BENIGN_TOKENS)]
        text = " ".join(toks)
        out.append(
            LabeledExample(
                example_id=f"train-b{i:02d}",
                vector=embed(lex, text),
                label=TriageLabel.BENIGN,
                timestamp=at(-spread_s * (i + 1)),
            )
        )
        toks = SUSPICIOUS_TOKENS[i % len(SUSPICIOUS_TOKENS)], SUSPICIOUS_TOKENS[(i + 1) % len(SUSPICIOUS_TOKENS)]
        text = " ".join(toks)
        out.append(
            LabeledExample(
                example_id=f"train-s{i:02d}",
                vector=embed(lex, text),
                label=TriageLabel.SUSPICIOUS,
                timestamp=at(-spread_s * (i + 1) - 5.0),
            )
        )
    return out


def make_static_graph(lex: Lexicon) -> LayeredGraph:
    g = LayeredGraph(lex)
    g.add_static_node(
        GraphNode(
            id="host-web", kind=NodeKind.HOST, label="web-01",
            description="routine status heartbeat host",
        )
    )
    g.add_static_node(
        GraphNode(
            id="host-db", kind=NodeKind.HOST, label="db-01",
            description="backup status routine host",
        )
    )
    g.add_static_node(
        GraphNode(
            id="rule-intrusion", kind=NodeKind.RULE, label="intrusion rule",
            description="intrusion breach attack detection",
        )
    )
    g.add_static_node(
        GraphNode(
            id="tech-exploit", kind=NodeKind.TECHNIQUE_REF, label="exploit technique",
            description="exploit payload shellcode",
            attrs={"technique_id": "T0001"},
        )
    )
    g.add_static_edge(GraphEdge(src="host-web", dst="host-db", relation=Relation.CONNECTS_TO))
    g.add_static_edge(
        GraphEdge(src="rule-intrusion", dst="tech-exploit", relation=Relation.RELATES_TO)
    )
    g.seal_static()
    return g


def build_test_pipeline(
    tmp_path=None,
    provider=None,
    cases=None,
    lex: Lexicon | None = None,
    **kwargs,
):
    lex = lex or axis_lexicon()
    provider = provider if provider is not None else ScriptedProvider()
    cases = cases if cases is not None else FakeCaseBackend()
    defaults = dict(
        lexicon=lex,
        graph=make_static_graph(lex),
        training=make_training(lex),
        provider=provider,
        cases=cases,
        knn_config=KnnConfig(k=3, malicious_weight=1.0, window=timedelta(minutes=30)),
    )
    if tmp_path is not None:
        defaults["decisions_path"] = tmp_path / "decisions.jsonl"
        defaults["feedback_path"] = tmp_path / "feedback.jsonl"
    defaults.update(kwargs)
    return Pipeline(**defaults), provider, cases


@pytest.fixture
def lex():
    return axis_lexicon()


@pytest.fixture
def builtin_lex():
    return builtin_lexicon()


@pytest.fixture
def pipe(tmp_path):
    p, provider, cases = build_test_pipeline(tmp_path)
    p.test_provider = provider
    p.test_cases = cases
    try:
        yield p
    finally:
        p.close()


def zero_vec(dim: int) -> EmbeddingVector:
    return EmbeddingVector(np.zeros(dim), 0.0)
