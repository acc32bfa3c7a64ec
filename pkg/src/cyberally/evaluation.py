"""Seeded synthetic corpora and the dedup/classifier evaluation reports.

The generator builds alert streams with controlled duplication and class
imbalance. Distinct alert types are rejection-sampled so that any two stay
below the dedup threshold under the given lexicon, while duplicates are
exact text repeats placed inside the dedup window of their representative;
after-dedup counts therefore equal the distinct counts by construction.
Suspicious types share a few anchor tokens (so they cluster in embedding
space) and arrive in short bursts (so they cluster in time), which is what
gives the weighted kNN something real to find.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import yaml

from .alerts import Alert, TriageLabel, alert_text, format_timestamp, parse_alert
from .classifier import KnnConfig, LabeledExample, Metrics, evaluate_cv
from .dedup import DedupConfig, DedupFilter
from .embedding import Lexicon, embed

_CORPUS_EPOCH = datetime(2025, 6, 1, tzinfo=timezone.utc)
_HOSTS = ("web-01", "db-01", "mail-01", "dmz-01", "ws-07")

_ANCHOR_COUNT = 3
_SUSPICIOUS_POOL = 40
_FAMILY_SIZE = 20
_BURST_SIZE = 20
_BURST_HALF_SPAN_S = 450.0

ALERTS_FILENAME = "alerts.ndjson"
LABELED_FILENAME = "labeled.ndjson"
SPEC_FILENAME = "spec.json"


class UnsatisfiableSpec(ValueError):
    pass


@dataclass(frozen=True)
class CorpusSpec:
    seed: int
    per_priority_distinct: dict[int, int]
    per_priority_total: dict[int, int]
    malicious_fraction: float
    duration: timedelta

    def __post_init__(self):
        if set(self.per_priority_distinct) != set(self.per_priority_total):
            raise ValueError("distinct and total maps must cover the same priorities")
        if not self.per_priority_distinct:
            raise ValueError("at least one priority required")
        for p, distinct in self.per_priority_distinct.items():
            total = self.per_priority_total[p]
            if distinct < 1:
                raise ValueError(f"priority {p}: distinct must be >= 1")
            if total < distinct:
                raise UnsatisfiableSpec(
                    f"priority {p}: total {total} < distinct {distinct}"
                )
        if not 0.0 < self.malicious_fraction < 1.0:
            raise ValueError("malicious_fraction must be in (0, 1)")
        if self.duration <= timedelta(0):
            raise ValueError("duration must be positive")

    @property
    def total_distinct(self) -> int:
        return sum(self.per_priority_distinct.values())

    @property
    def total_alerts(self) -> int:
        return sum(self.per_priority_total.values())

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "duration_minutes": int(self.duration.total_seconds() // 60),
            "malicious_fraction": self.malicious_fraction,
            "priorities": {
                str(p): {
                    "distinct": self.per_priority_distinct[p],
                    "total": self.per_priority_total[p],
                }
                for p in sorted(self.per_priority_distinct)
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CorpusSpec":
        priorities = doc.get("priorities")
        if not isinstance(priorities, dict):
            raise ValueError("spec needs a priorities mapping")
        distinct = {}
        total = {}
        for key, entry in priorities.items():
            p = int(key)
            distinct[p] = int(entry["distinct"])
            total[p] = int(entry["total"])
        return cls(
            seed=int(doc["seed"]),
            per_priority_distinct=distinct,
            per_priority_total=total,
            malicious_fraction=float(doc["malicious_fraction"]),
            duration=timedelta(minutes=int(doc["duration_minutes"])),
        )

    @classmethod
    def from_file(cls, path) -> "CorpusSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))


def _draw_text(
    rng: random.Random,
    suspicious: bool,
    anchors: list[str],
    susp_pool: list[str],
    benign_families: list[list[str]],
) -> str:
    if suspicious:
        words = list(anchors) + rng.sample(susp_pool, rng.randint(3, 6))
    else:
        family = benign_families[rng.randrange(len(benign_families))]
        words = rng.sample(family, rng.randint(5, min(8, len(family))))
    rng.shuffle(words)
    return " ".join(words)


def generate_corpus(
    spec: CorpusSpec,
    lex: Lexicon,
    out_dir: str | Path,
    separation: float = 0.93,
) -> tuple[Path, Path]:
    """Write ``alerts.ndjson`` (wire-format stream, timestamp-sorted) and
    ``labeled.ndjson`` (same records plus a per-type label) under ``out_dir``.

    Output bytes are a pure function of (spec, lexicon): all randomness comes
    from sub-generators seeded off ``spec.seed`` and is drawn in a fixed
    phase order (vocabulary, labels, texts, timestamps, duplicates, agents).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    master = random.Random(spec.seed)
    vocab_rng = random.Random(master.randrange(2**32))
    label_rng = random.Random(master.randrange(2**32))
    text_rng = random.Random(master.randrange(2**32))
    time_rng = random.Random(master.randrange(2**32))
    dup_rng = random.Random(master.randrange(2**32))
    agent_rng = random.Random(master.randrange(2**32))

    tokens = sorted(lex.entries)
    if len(tokens) < _ANCHOR_COUNT + _SUSPICIOUS_POOL + 20:
        raise UnsatisfiableSpec("lexicon too small to partition vocabularies")
    pool = list(tokens)
    vocab_rng.shuffle(pool)
    anchors = pool[:_ANCHOR_COUNT]
    susp_pool = pool[_ANCHOR_COUNT : _ANCHOR_COUNT + _SUSPICIOUS_POOL]
    benign_pool = pool[_ANCHOR_COUNT + _SUSPICIOUS_POOL :]
    # benign texts draw from token families so benign queries have strong
    # benign neighbors even during a suspicious burst
    n_families = max(1, len(benign_pool) // _FAMILY_SIZE)
    benign_families = [benign_pool[i::n_families] for i in range(n_families)]

    priorities = sorted(spec.per_priority_distinct)
    slots = [(p, i) for p in priorities for i in range(spec.per_priority_distinct[p])]
    n_susp = round(spec.malicious_fraction * len(slots))
    suspicious_slots = set(label_rng.sample(range(len(slots)), n_susp))

    # distinct type texts, globally separated below the dedup threshold
    dim = lex.dimension
    unit_vectors = np.empty((len(slots), dim), dtype=float)
    texts: list[str] = []
    for slot_idx in range(len(slots)):
        is_susp = slot_idx in suspicious_slots
        for _ in range(5000):
            text = _draw_text(text_rng, is_susp, anchors, susp_pool, benign_families)
            values = embed(lex, text).values
            norm = float(np.linalg.norm(values))
            if norm == 0.0:
                continue
            unit = values / norm
            if slot_idx and float(np.max(unit_vectors[:slot_idx] @ unit)) >= separation:
                continue
            unit_vectors[slot_idx] = unit
            texts.append(text)
            break
        else:
            raise UnsatisfiableSpec(
                f"could not separate {len(slots)} distinct types below {separation}"
            )

    # representative timestamps: benign uniform, suspicious in short bursts
    duration_s = spec.duration.total_seconds()
    n_bursts = max(1, math.ceil(n_susp / _BURST_SIZE))
    susp_seen = 0
    rep_offsets: list[float] = []
    for slot_idx in range(len(slots)):
        if slot_idx in suspicious_slots:
            burst = susp_seen // _BURST_SIZE
            susp_seen += 1
            center = duration_s * (burst + 1) / (n_bursts + 1)
            offset = center + time_rng.uniform(-_BURST_HALF_SPAN_S, _BURST_HALF_SPAN_S)
        else:
            offset = time_rng.uniform(0.0, duration_s)
        rep_offsets.append(min(max(offset, 0.0), duration_s))

    # duplicates: exact repeats strictly inside the dedup window of their rep
    window_s = DedupConfig().window.total_seconds()
    slot_index_of = {slot: idx for idx, slot in enumerate(slots)}
    entries: list[tuple[float, int, int]] = []  # (offset, slot_idx, arrival_rank)
    rank = 0
    for p in priorities:
        for i in range(spec.per_priority_distinct[p]):
            entries.append((rep_offsets[slot_index_of[(p, i)]], slot_index_of[(p, i)], rank))
            rank += 1
    for p in priorities:
        for _ in range(spec.per_priority_total[p] - spec.per_priority_distinct[p]):
            slot_idx = slot_index_of[(p, dup_rng.randrange(spec.per_priority_distinct[p]))]
            offset = rep_offsets[slot_idx] + dup_rng.uniform(1.0, 0.9 * window_s)
            entries.append((offset, slot_idx, rank))
            rank += 1

    entries.sort(key=lambda e: (e[0], e[2]))

    alert_lines = []
    labeled_lines = []
    for seq, (offset, slot_idx, _) in enumerate(entries):
        p, i = slots[slot_idx]
        record = {
            "id": f"evt-{seq:06d}",
            "timestamp": format_timestamp(_CORPUS_EPOCH + timedelta(seconds=offset)),
            "rule": {
                "id": f"rule-{p:02d}-{i:03d}",
                "level": p,
                "description": texts[slot_idx],
            },
            "full_log": "",
            "agent": {"name": agent_rng.choice(_HOSTS)},
        }
        alert_lines.append(json.dumps(record, sort_keys=True))
        labeled = dict(record)
        labeled["label"] = (
            "suspicious" if slot_idx in suspicious_slots else "benign"
        )
        labeled_lines.append(json.dumps(labeled, sort_keys=True))

    alerts_path = out / ALERTS_FILENAME
    labeled_path = out / LABELED_FILENAME
    alerts_path.write_text("\n".join(alert_lines) + "\n", encoding="utf-8")
    labeled_path.write_text("\n".join(labeled_lines) + "\n", encoding="utf-8")
    (out / SPEC_FILENAME).write_text(
        json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return alerts_path, labeled_path


# -- evaluations ---------------------------------------------------------------

def run_dedup_eval(
    corpus_dir: str | Path,
    lex: Lexicon,
    cfg: DedupConfig | None = None,
) -> dict:
    """Stream the corpus through the dedup filter; per-priority counts."""
    cfg = cfg or DedupConfig()
    filt = DedupFilter(cfg)
    totals: dict[int, int] = {}
    kept: dict[int, int] = {}
    with open(Path(corpus_dir) / ALERTS_FILENAME, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            alert = parse_alert(line)
            vec = embed(lex, alert_text(alert))
            verdict = filt.check_and_admit(alert, vec)
            totals[alert.priority] = totals.get(alert.priority, 0) + 1
            if not verdict.is_duplicate:
                kept[alert.priority] = kept.get(alert.priority, 0) + 1
    per_priority = {
        p: {"total": totals[p], "after_dedup": kept.get(p, 0)} for p in sorted(totals)
    }
    return {
        "per_priority": per_priority,
        "totals": {
            "total": sum(totals.values()),
            "after_dedup": sum(kept.values()),
        },
    }


def render_dedup_table(result: dict) -> str:
    lines = [f"{'priority':>8}  {'total':>7}  {'after_dedup':>11}"]
    for p, row in result["per_priority"].items():
        lines.append(f"{p:>8}  {row['total']:>7}  {row['after_dedup']:>11}")
    totals = result["totals"]
    lines.append(f"{'all':>8}  {totals['total']:>7}  {totals['after_dedup']:>11}")
    return "\n".join(lines)


def load_labeled_corpus(path: str | Path, lex: Lexicon) -> list[LabeledExample]:
    """Read a labeled alert file into classifier examples. Records whose text
    has no lexicon coverage are skipped (cosine is undefined for them)."""
    examples: list[LabeledExample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            label = TriageLabel(str(doc.pop("label")).lower())
            alert: Alert = parse_alert(doc)
            vec = embed(lex, alert_text(alert))
            if vec.is_zero:
                continue
            examples.append(
                LabeledExample(
                    example_id=alert.id,
                    vector=vec,
                    label=label,
                    timestamp=alert.timestamp,
                )
            )
    return examples


def run_classifier_eval(
    corpus_dir: str | Path,
    lex: Lexicon,
    weights: tuple[float, ...] = (1.0, 5.0, 10.0),
    folds: int = 10,
    seed: int = 0,
    k: int = 15,
    window: timedelta | None = None,
) -> dict[float, Metrics]:
    """Cross-validated metrics at each Suspicious-vote weight."""
    data = load_labeled_corpus(Path(corpus_dir) / LABELED_FILENAME, lex)
    results: dict[float, Metrics] = {}
    for weight in weights:
        cfg = KnnConfig(
            k=k,
            malicious_weight=weight,
            window=window if window is not None else KnnConfig().window,
        )
        results[weight] = evaluate_cv(data, cfg, folds=folds, seed=seed)
    return results


def render_knn_table(results: dict[float, Metrics]) -> str:
    weights = list(results)
    header = f"{'metric':<10}" + "".join(f"  w={w:<8g}" for w in weights)
    lines = [header]
    for name in ("precision", "recall", "f1"):
        row = f"{name:<10}"
        for w in weights:
            m = results[w]
            value = {"precision": m.precision, "recall": m.recall, "f1": m.f1}[name]
            row += f"  {value:<10.4f}"
        lines.append(row)
    for name in ("tp", "fp", "tn", "fn"):
        row = f"{name:<10}"
        for w in weights:
            row += f"  {getattr(results[w], name):<10d}"
        lines.append(row)
    return "\n".join(lines)


def knn_report_dict(results: dict[float, Metrics]) -> dict:
    return {str(w): results[w].to_dict() for w in results}
