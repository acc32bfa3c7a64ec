"""Service configuration: a small YAML file wired into a running pipeline.

Every key has a default, so ``cyberally serve`` with no config runs a fully
offline demo: builtin lexicon, bundled static graph and training corpus, the
scripted suggestion provider, and the in-memory case backend. Supplying
``llm.base_url`` or ``cases.base_url`` switches the respective stage to its
HTTP client.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta
from importlib import resources
from pathlib import Path

import yaml

from .cases import CaseBackend, FakeCaseBackend, HttpCaseBackend
from .classifier import KnnConfig, fit_weight
from .dedup import DedupConfig
from .embedding import Lexicon, builtin_lexicon, load_lexicon
from .evaluation import load_labeled_corpus
from .graph import LayeredGraph, load_static
from .pipeline import Pipeline
from .retrieval import RetrievalConfig
from .suggestions import ChatProvider, HttpChatProvider, ScriptedProvider

DEMO_TRAINING_FILENAME = "demo_training.ndjson"
DEMO_ALERTS_FILENAME = "demo_alerts.ndjson"
DEMO_GRAPH_FILENAME = "static_graph.yaml"


class ConfigError(ValueError):
    pass


def bundled_data_dir() -> Path:
    """Directory with the packaged demo corpus, graph, and corpus specs."""
    return Path(str(resources.files("cyberally").joinpath("data")))


@dataclass(frozen=True)
class ServiceConfig:
    dedup: DedupConfig
    knn_k: int
    knn_window: timedelta
    knn_weight: float | str  # numeric, or "auto" to fit from training balance
    retrieval: RetrievalConfig
    llm_base_url: str | None
    llm_model: str
    cases_base_url: str | None
    lexicon_path: Path | None
    static_graph_path: Path | None
    training_path: Path | None
    decisions_log: Path | None
    feedback_log: Path | None
    host: str = "127.0.0.1"
    port: int = 8787


_KNOWN_KEYS = {
    "dedup": {"threshold", "window_minutes", "skew_seconds"},
    "knn": {"k", "window_minutes", "malicious_weight"},
    "rag": {"top_k_static", "top_k_dynamic", "hops", "min_score"},
    "llm": {"base_url", "model"},
    "cases": {"base_url"},
    "paths": {"lexicon", "static_graph", "training", "decisions_log", "feedback_log"},
    "service": {"host", "port"},
}


def _section(doc: dict, name: str) -> dict:
    raw = doc.get(name, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    unknown = set(raw) - _KNOWN_KEYS[name]
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {sorted(unknown)}")
    return raw


def _opt_path(raw: dict, key: str) -> Path | None:
    value = raw.get(key)
    return Path(value) if value else None


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Parse a YAML config file; with no path, return pure defaults."""
    doc: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a mapping")
        unknown = set(doc) - set(_KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown section(s): {sorted(unknown)}")

    dedup_raw = _section(doc, "dedup")
    knn_raw = _section(doc, "knn")
    rag_raw = _section(doc, "rag")
    llm_raw = _section(doc, "llm")
    cases_raw = _section(doc, "cases")
    paths_raw = _section(doc, "paths")
    service_raw = _section(doc, "service")

    try:
        dedup = DedupConfig(
            threshold=float(dedup_raw.get("threshold", 0.95)),
            window=timedelta(minutes=int(dedup_raw.get("window_minutes", 30))),
            skew_tolerance=timedelta(seconds=int(dedup_raw.get("skew_seconds", 5))),
        )
        retrieval = RetrievalConfig(
            top_k_static=int(rag_raw.get("top_k_static", 5)),
            top_k_dynamic=int(rag_raw.get("top_k_dynamic", 3)),
            hops=int(rag_raw.get("hops", 1)),
            min_score=float(rag_raw.get("min_score", 0.3)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    weight_raw = knn_raw.get("malicious_weight", "auto")
    if isinstance(weight_raw, str):
        if weight_raw.lower() != "auto":
            raise ConfigError("knn.malicious_weight must be a number or 'auto'")
        weight: float | str = "auto"
    else:
        weight = float(weight_raw)
        if weight < 1.0:
            raise ConfigError("knn.malicious_weight must be >= 1")

    k = int(knn_raw.get("k", 15))
    if k < 1:
        raise ConfigError("knn.k must be >= 1")

    return ServiceConfig(
        dedup=dedup,
        knn_k=k,
        knn_window=timedelta(minutes=int(knn_raw.get("window_minutes", 30))),
        knn_weight=weight,
        retrieval=retrieval,
        llm_base_url=llm_raw.get("base_url") or None,
        llm_model=str(llm_raw.get("model", "triage-assistant-v1")),
        cases_base_url=cases_raw.get("base_url") or None,
        lexicon_path=_opt_path(paths_raw, "lexicon"),
        static_graph_path=_opt_path(paths_raw, "static_graph"),
        training_path=_opt_path(paths_raw, "training"),
        decisions_log=_opt_path(paths_raw, "decisions_log"),
        feedback_log=_opt_path(paths_raw, "feedback_log"),
        host=str(service_raw.get("host", "127.0.0.1")),
        port=int(service_raw.get("port", 8787)),
    )


def build_pipeline(
    cfg: ServiceConfig,
    *,
    provider: ChatProvider | None = None,
    cases: CaseBackend | None = None,
) -> Pipeline:
    """Assemble a pipeline from a config; keyword overrides win over config
    (tests inject scripted fakes this way)."""
    lexicon: Lexicon = (
        load_lexicon(cfg.lexicon_path) if cfg.lexicon_path else builtin_lexicon()
    )

    graph_path = cfg.static_graph_path or bundled_data_dir() / DEMO_GRAPH_FILENAME
    graph: LayeredGraph = load_static(graph_path, lexicon)

    training_path = cfg.training_path or bundled_data_dir() / DEMO_TRAINING_FILENAME
    training = load_labeled_corpus(training_path, lexicon)
    if cfg.knn_weight == "auto":
        weight = fit_weight(training)
    else:
        weight = float(cfg.knn_weight)
    knn = KnnConfig(k=cfg.knn_k, malicious_weight=weight, window=cfg.knn_window)

    if provider is None:
        if cfg.llm_base_url:
            provider = HttpChatProvider(cfg.llm_base_url)
        else:
            provider = ScriptedProvider()
    if cases is None:
        if cfg.cases_base_url:
            cases = HttpCaseBackend(cfg.cases_base_url)
        else:
            cases = FakeCaseBackend()

    return Pipeline(
        lexicon=lexicon,
        graph=graph,
        training=training,
        provider=provider,
        cases=cases,
        model=cfg.llm_model,
        dedup_config=cfg.dedup,
        knn_config=knn,
        retrieval_config=cfg.retrieval,
        decisions_path=cfg.decisions_log,
        feedback_path=cfg.feedback_log,
    )
