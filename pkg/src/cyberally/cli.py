"""Command-line entry points: serve the HTTP API, replay an alert file, and
run the corpus/evaluation suite (gen, dedup, knn)."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import build_pipeline, load_config
from .embedding import builtin_lexicon, load_lexicon
from .evaluation import (
    ALERTS_FILENAME,
    CorpusSpec,
    generate_corpus,
    knn_report_dict,
    render_dedup_table,
    render_knn_table,
    run_classifier_eval,
    run_dedup_eval,
)


def _lexicon(path: str | None):
    return load_lexicon(path) if path else builtin_lexicon()


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_config(args.config)
    pipeline = build_pipeline(cfg)
    app = create_app(pipeline)
    host = args.host or cfg.host
    port = args.port if args.port is not None else cfg.port
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        pipeline.close()
    return 0


def _render_report(report: dict) -> str:
    order = (
        "ingested",
        "duplicates",
        "benign",
        "suspicious",
        "carded",
        "failed",
        "tickets",
        "feedback",
        "failed_decisions",
    )
    width = max(len(k) for k in order)
    lines = [f"{key:<{width}}  {report[key]:>6}" for key in order if key in report]
    lines.append(f"{'conservation':<{width}}  {'ok' if report.get('conservation') else 'VIOLATED'}")
    return "\n".join(lines)


def _cmd_replay(args) -> int:
    cfg = load_config(args.config)
    pipeline = build_pipeline(cfg)
    try:
        report = pipeline.replay(args.file, speed=args.speed)
    finally:
        pipeline.close()
    doc = report.to_dict()
    print(_render_report(doc))
    if args.out:
        _write_json(Path(args.out), doc)
    return 0 if doc.get("conservation") else 1


def _cmd_eval_gen(args) -> int:
    spec = CorpusSpec.from_file(args.spec)
    lex = _lexicon(args.lexicon)
    alerts_path, labeled_path = generate_corpus(spec, lex, args.out)
    print(f"wrote {alerts_path} ({spec.total_alerts} alerts)")
    print(f"wrote {labeled_path} ({spec.total_distinct} distinct types)")
    return 0


def _cmd_eval_dedup(args) -> int:
    lex = _lexicon(args.lexicon)
    result = run_dedup_eval(args.corpus, lex)
    print(render_dedup_table(result))
    out = Path(args.out) if args.out else Path(args.corpus) / "dedup_report.json"
    _write_json(out, result)
    return 0


def _cmd_eval_knn(args) -> int:
    lex = _lexicon(args.lexicon)
    weights = tuple(float(w) for w in args.weights.split(","))
    results = run_classifier_eval(
        args.corpus, lex, weights=weights, folds=args.folds, seed=args.seed
    )
    print(render_knn_table(results))
    out = Path(args.out) if args.out else Path(args.corpus) / "knn_report.json"
    _write_json(out, knn_report_dict(results))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyberally",
        description="Alert triage pipeline: serve, replay, and evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", default=None, help="YAML config file")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(func=_cmd_serve)

    replay = sub.add_parser("replay", help="feed an alert file through the pipeline")
    replay.add_argument("file", help="newline-delimited alert records")
    replay.add_argument("--speed", type=float, default=0.0,
                        help="inter-arrival scale factor; 0 = as fast as possible")
    replay.add_argument("--config", default=None, help="YAML config file")
    replay.add_argument("--out", default=None, help="write the run report as JSON")
    replay.set_defaults(func=_cmd_replay)

    evalp = sub.add_parser("eval", help="corpus generation and evaluations")
    evalsub = evalp.add_subparsers(dest="eval_command", required=True)

    gen = evalsub.add_parser("gen", help="generate a seeded synthetic corpus")
    gen.add_argument("--spec", required=True, help="corpus spec YAML")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--lexicon", default=None, help="lexicon file (default builtin)")
    gen.set_defaults(func=_cmd_eval_gen)

    dedup = evalsub.add_parser("dedup", help="per-priority dedup counts")
    dedup.add_argument("--corpus", required=True,
                       help=f"directory containing {ALERTS_FILENAME}")
    dedup.add_argument("--lexicon", default=None)
    dedup.add_argument("--out", default=None, help="report JSON path")
    dedup.set_defaults(func=_cmd_eval_dedup)

    knn = evalsub.add_parser("knn", help="cross-validated metrics per vote weight")
    knn.add_argument("--corpus", required=True, help="directory with labeled corpus")
    knn.add_argument("--weights", default="1,5,10")
    knn.add_argument("--folds", type=int, default=10)
    knn.add_argument("--seed", type=int, default=0)
    knn.add_argument("--lexicon", default=None)
    knn.add_argument("--out", default=None, help="report JSON path")
    knn.set_defaults(func=_cmd_eval_knn)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
