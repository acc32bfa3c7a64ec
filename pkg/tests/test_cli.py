import json
from pathlib import Path

import pytest

from cyberally.cli import main
from cyberally.config import bundled_data_dir

TABLE1_SPEC = bundled_data_dir() / "table1_spec.yaml"
DEMO_ALERTS = bundled_data_dir() / "demo_alerts.ndjson"
DEMO_CONFIG = bundled_data_dir() / "demo_config.yaml"
GOLDEN_REPLAY = Path(__file__).parent / "goldens" / "demo_replay.json"


def gen(out_dir):
    assert main(["eval", "gen", "--spec", str(TABLE1_SPEC), "--out", str(out_dir)]) == 0
    return out_dir


def test_eval_gen_is_deterministic(tmp_path, capsys):
    first = gen(tmp_path / "one")
    printed = capsys.readouterr().out
    assert "alerts.ndjson" in printed and "labeled.ndjson" in printed
    second = gen(tmp_path / "two")
    for name in ("alerts.ndjson", "labeled.ndjson", "spec.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_eval_dedup_prints_table_and_writes_report(tmp_path, capsys):
    corpus = gen(tmp_path / "corpus")
    capsys.readouterr()
    assert main(["eval", "dedup", "--corpus", str(corpus)]) == 0
    out = capsys.readouterr().out
    assert "priority" in out and "after_dedup" in out
    report = json.loads((corpus / "dedup_report.json").read_text())
    assert set(report) == {"per_priority", "totals"}
    assert report["totals"]["total"] == sum(
        row["total"] for row in report["per_priority"].values()
    )

    custom = tmp_path / "elsewhere" / "report.json"
    assert main(
        ["eval", "dedup", "--corpus", str(corpus), "--out", str(custom)]
    ) == 0
    assert json.loads(custom.read_text()) == report


def test_eval_knn_writes_metrics_per_weight(tmp_path, capsys):
    corpus = gen(tmp_path / "corpus")
    capsys.readouterr()
    assert main(
        [
            "eval", "knn",
            "--corpus", str(corpus),
            "--weights", "1,2",
            "--folds", "3",
        ]
    ) == 0
    out = capsys.readouterr().out
    assert "recall" in out and "w=1" in out
    report = json.loads((corpus / "knn_report.json").read_text())
    assert set(report) == {"1.0", "2.0"}
    for metrics in report.values():
        confusion = metrics["confusion"]
        assert sum(confusion.values()) > 0
        assert 0.0 <= metrics["recall"] <= 1.0


def test_replay_demo_conserves_and_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(
        ["replay", str(DEMO_ALERTS), "--config", str(DEMO_CONFIG), "--out", str(out)]
    )
    printed = capsys.readouterr().out
    assert code == 0
    assert "conservation" in printed and "ok" in printed
    report = json.loads(out.read_text())
    golden = json.loads(GOLDEN_REPLAY.read_text())
    for key, value in golden.items():
        assert report[key] == value, key
    assert report["conservation"] is True


def test_replay_missing_file_errors(tmp_path, capsys):
    code = main(["replay", str(tmp_path / "missing.ndjson")])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.err.startswith("error:")


def test_eval_gen_missing_spec_errors(tmp_path, capsys):
    code = main(
        ["eval", "gen", "--spec", str(tmp_path / "no.yaml"), "--out", str(tmp_path / "o")]
    )
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


@pytest.mark.parametrize("argv", [[], ["eval"], ["nope"], ["replay"]])
def test_bad_arguments_exit_two(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 2
