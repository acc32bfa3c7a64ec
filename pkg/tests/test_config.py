from datetime import timedelta

import pytest

from cyberally.cases import FakeCaseBackend, HttpCaseBackend
from cyberally.config import (
    ConfigError,
    build_pipeline,
    bundled_data_dir,
    load_config,
)
from cyberally.suggestions import HttpChatProvider, ScriptedProvider

FULL_YAML = """
dedup:
  threshold: 0.9
  window_minutes: 10
  skew_seconds: 2
knn:
  k: 7
  window_minutes: 45
  malicious_weight: 3
rag:
  top_k_static: 2
  top_k_dynamic: 1
  hops: 0
  min_score: 0.5
llm:
  base_url: http://llm.test
  model: my-model
cases:
  base_url: http://cases.test
paths:
  decisions_log: /tmp/decisions.jsonl
service:
  host: 0.0.0.0
  port: 9000
"""


def write(tmp_path, text):
    path = tmp_path / "config.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_without_file():
    cfg = load_config(None)
    assert cfg.dedup.threshold == 0.95
    assert cfg.dedup.window == timedelta(minutes=30)
    assert cfg.dedup.skew_tolerance == timedelta(seconds=5)
    assert cfg.knn_k == 15
    assert cfg.knn_window == timedelta(minutes=30)
    assert cfg.knn_weight == "auto"
    assert cfg.retrieval.top_k_static == 5
    assert cfg.retrieval.top_k_dynamic == 3
    assert cfg.retrieval.hops == 1
    assert cfg.retrieval.min_score == 0.3
    assert cfg.llm_base_url is None
    assert cfg.llm_model == "triage-assistant-v1"
    assert cfg.cases_base_url is None
    assert cfg.host == "127.0.0.1"
    assert cfg.port == 8787


def test_full_file_overrides_everything(tmp_path):
    cfg = load_config(write(tmp_path, FULL_YAML))
    assert cfg.dedup.threshold == 0.9
    assert cfg.dedup.window == timedelta(minutes=10)
    assert cfg.knn_k == 7
    assert cfg.knn_weight == 3.0
    assert cfg.retrieval.min_score == 0.5
    assert cfg.llm_base_url == "http://llm.test"
    assert cfg.llm_model == "my-model"
    assert cfg.cases_base_url == "http://cases.test"
    assert cfg.decisions_log.name == "decisions.jsonl"
    assert cfg.host == "0.0.0.0"
    assert cfg.port == 9000


def test_empty_file_is_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "\n"))
    assert cfg.knn_k == 15


@pytest.mark.parametrize(
    "text",
    [
        "mystery:\n  x: 1\n",
        "dedup:\n  thresh: 0.9\n",
        "knn:\n  malicious_weight: fast\n",
        "knn:\n  malicious_weight: 0.5\n",
        "knn:\n  k: 0\n",
        "dedup: 7\n",
        "- a\n- b\n",
    ],
)
def test_rejected_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_bundled_demo_files_exist():
    data = bundled_data_dir()
    for name in (
        "static_graph.yaml",
        "demo_training.ndjson",
        "demo_alerts.ndjson",
        "demo_config.yaml",
        "table1_spec.yaml",
        "imbalanced_spec.yaml",
    ):
        assert (data / name).is_file(), name


def test_build_pipeline_defaults_to_fakes():
    pipe = build_pipeline(load_config(None))
    try:
        assert isinstance(pipe.provider, ScriptedProvider)
        assert isinstance(pipe.cases, FakeCaseBackend)
        # "auto" fits the weight from the bundled training balance
        assert pipe.knn_config.malicious_weight == 2.0
        assert pipe.knn_config.k == 15
        assert pipe.graph.has_node("host-web-01")
    finally:
        pipe.close()


def test_build_pipeline_base_urls_select_http_clients(tmp_path):
    cfg = load_config(write(tmp_path, FULL_YAML))
    pipe = build_pipeline(cfg)
    try:
        assert isinstance(pipe.provider, HttpChatProvider)
        assert isinstance(pipe.cases, HttpCaseBackend)
        assert pipe.model == "my-model"
        assert pipe.knn_config.malicious_weight == 3.0
    finally:
        pipe.close()


def test_build_pipeline_keyword_overrides_win(tmp_path):
    cfg = load_config(write(tmp_path, FULL_YAML))
    provider = ScriptedProvider()
    cases = FakeCaseBackend()
    pipe = build_pipeline(cfg, provider=provider, cases=cases)
    try:
        assert pipe.provider is provider
        assert pipe.cases is cases
    finally:
        pipe.close()


def test_demo_config_pins_neighbor_count():
    cfg = load_config(bundled_data_dir() / "demo_config.yaml")
    assert cfg.knn_k == 5
