"""End-to-end alert pipeline and its event stream.

One ingest writer runs parse, embed, dedup, classify and graph writes in
order; card generation fans out to a small worker pool over graph snapshots
and is re-sequenced so CardReady events appear in ingest order. Analyst
decisions and feedback serialize through the same writer lock. Decisions
and feedback append to durable logs that are reloaded on restart.
"""

from __future__ import annotations

import concurrent.futures
import json
import threading
import time
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable

from .alerts import (
    Alert,
    AlertParseError,
    TriageLabel,
    alert_text,
    format_timestamp,
    now_utc,
    parse_alert,
    parse_timestamp,
)
from .cases import CaseBackend, CaseError, CaseTicket, create_ticket, link_ticket
from .classifier import EmptyTrainingSet, KnnConfig, LabeledExample, classify
from .dedup import DedupConfig, DedupFilter, OutOfOrderTimestamp
from .embedding import Lexicon, embed
from .graph import GraphError, LayeredGraph, record_alert, record_ticket
from .retrieval import ContextBundle, RetrievalConfig, retrieve
from .suggestions import (
    ChatProvider,
    PromptTemplate,
    SuggestionCard,
    default_template,
    generate_card,
)


class PipelineError(Exception):
    pass


class UnknownAlert(PipelineError):
    pass


class AlreadyDecided(PipelineError):
    pass


class RatingOutOfRange(PipelineError):
    pass


class Stage(Enum):
    INGESTED = "Ingested"
    DEDUPLICATED = "Deduplicated"
    CLASSIFIED_BENIGN = "ClassifiedBenign"
    CLASSIFIED_SUSPICIOUS = "ClassifiedSuspicious"
    CARD_READY = "CardReady"
    TICKET_CREATED = "TicketCreated"
    FEEDBACK_RECORDED = "FeedbackRecorded"
    FAILED = "Failed"


class Verdict(Enum):
    APPROVE = "Approve"
    DISMISS = "Dismiss"


@dataclass(frozen=True)
class PipelineEvent:
    seq: int
    stage: Stage
    alert_id: str
    payload: dict
    at: datetime

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "stage": self.stage.value,
            "alert_id": self.alert_id,
            "payload": self.payload,
            "at": format_timestamp(self.at),
        }


@dataclass(frozen=True)
class Decision:
    alert_id: str
    verdict: Verdict
    analyst: str
    at: datetime

    def to_record(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "verdict": self.verdict.value,
            "analyst": self.analyst,
            "at": format_timestamp(self.at),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Decision":
        return cls(
            alert_id=rec["alert_id"],
            verdict=Verdict(rec["verdict"]),
            analyst=rec.get("analyst", ""),
            at=parse_timestamp(rec["at"]),
        )


@dataclass(frozen=True)
class Feedback:
    alert_id: str
    rating: int
    comment: str
    analyst: str
    at: datetime

    def to_record(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "rating": self.rating,
            "comment": self.comment,
            "analyst": self.analyst,
            "at": format_timestamp(self.at),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Feedback":
        return cls(
            alert_id=rec["alert_id"],
            rating=int(rec["rating"]),
            comment=rec.get("comment", ""),
            analyst=rec.get("analyst", ""),
            at=parse_timestamp(rec["at"]),
        )


@dataclass
class RunReport:
    """Per-stage event counts. ``failed`` covers per-alert stage failures;
    decision-time backend failures are tracked apart so conservation over
    ingested alerts still holds."""

    ingested: int = 0
    duplicates: int = 0
    benign: int = 0
    suspicious: int = 0
    carded: int = 0
    failed: int = 0
    tickets: int = 0
    feedback: int = 0
    failed_decisions: int = 0

    @property
    def conservation_holds(self) -> bool:
        return self.ingested == self.duplicates + self.benign + self.carded + self.failed

    def to_dict(self) -> dict:
        return {
            "ingested": self.ingested,
            "duplicates": self.duplicates,
            "benign": self.benign,
            "suspicious": self.suspicious,
            "carded": self.carded,
            "failed": self.failed,
            "tickets": self.tickets,
            "feedback": self.feedback,
            "failed_decisions": self.failed_decisions,
            "conservation": self.conservation_holds,
        }

    @classmethod
    def from_events(cls, events: list[PipelineEvent]) -> "RunReport":
        report = cls()
        for e in events:
            if e.stage is Stage.INGESTED:
                report.ingested += 1
            elif e.stage is Stage.DEDUPLICATED:
                report.duplicates += 1
            elif e.stage is Stage.CLASSIFIED_BENIGN:
                report.benign += 1
            elif e.stage is Stage.CLASSIFIED_SUSPICIOUS:
                report.suspicious += 1
            elif e.stage is Stage.CARD_READY:
                report.carded += 1
            elif e.stage is Stage.TICKET_CREATED:
                report.tickets += 1
            elif e.stage is Stage.FEEDBACK_RECORDED:
                report.feedback += 1
            elif e.stage is Stage.FAILED:
                if e.payload.get("stage") == "decision":
                    report.failed_decisions += 1
                else:
                    report.failed += 1
        return report


def _append_jsonl(path: Path | None, record: dict) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _read_jsonl(path: Path | None) -> list[dict]:
    if path is None or not path.exists():
        return []
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


class Pipeline:
    """Single-stream orchestrator. One instance per live feed."""

    def __init__(
        self,
        *,
        lexicon: Lexicon,
        graph: LayeredGraph,
        training: list[LabeledExample],
        provider: ChatProvider,
        cases: CaseBackend,
        model: str = "triage-assistant-v1",
        template: PromptTemplate | None = None,
        dedup_config: DedupConfig | None = None,
        knn_config: KnnConfig | None = None,
        retrieval_config: RetrievalConfig | None = None,
        decisions_path: str | Path | None = None,
        feedback_path: str | Path | None = None,
        card_workers: int = 4,
    ):
        self.lexicon = lexicon
        self.graph = graph
        self.template = template or default_template()
        # cosine is undefined against zero-coverage examples, so drop them
        self.training = [
            ex for ex in training if not ex.vector.is_zero
        ]
        if not self.training:
            raise EmptyTrainingSet("pipeline needs at least one usable training example")
        self.provider = provider
        self.cases = cases
        self.model = model
        self.dedup_config = dedup_config or DedupConfig()
        self.knn_config = knn_config or KnnConfig()
        self.retrieval_config = retrieval_config or RetrievalConfig()
        self._dedup = DedupFilter(self.dedup_config)

        self._decisions_path = Path(decisions_path) if decisions_path else None
        self._feedback_path = Path(feedback_path) if feedback_path else None

        self._cond = threading.Condition()
        self._events: list[PipelineEvent] = []
        self._alerts: dict[str, Alert] = {}
        self._cards: dict[str, SuggestionCard] = {}
        self._related: dict[str, list[str]] = {}
        self._tickets: dict[str, CaseTicket] = {}
        self._decisions: dict[str, Decision] = {}
        self._feedback: list[Feedback] = []
        self._fallback_counter = 0

        self._executor = concurrent.futures.ThreadPoolExecutor(
            max_workers=max(1, card_workers), thread_name_prefix="card"
        )
        self._pending: deque[tuple[str, concurrent.futures.Future]] = deque()

        for rec in _read_jsonl(self._decisions_path):
            d = Decision.from_record(rec)
            self._decisions[d.alert_id] = d
        for rec in _read_jsonl(self._feedback_path):
            self._feedback.append(Feedback.from_record(rec))

    # -- event stream ---------------------------------------------------------

    def _emit(self, stage: Stage, alert_id: str, payload: dict) -> PipelineEvent:
        # callers hold self._cond
        event = PipelineEvent(
            seq=len(self._events) + 1,
            stage=stage,
            alert_id=alert_id,
            payload=payload,
            at=now_utc(),
        )
        self._events.append(event)
        self._cond.notify_all()
        return event

    def events_since(self, seq: int) -> list[PipelineEvent]:
        with self._cond:
            return [e for e in self._events if e.seq > seq]

    def wait_events(self, seq: int, timeout: float) -> list[PipelineEvent]:
        """Events after ``seq``, blocking up to ``timeout`` for new ones."""
        with self._cond:
            self._cond.wait_for(
                lambda: self._events and self._events[-1].seq > seq, timeout
            )
            return [e for e in self._events if e.seq > seq]

    @property
    def last_seq(self) -> int:
        with self._cond:
            return self._events[-1].seq if self._events else 0

    def report(self) -> RunReport:
        with self._cond:
            return RunReport.from_events(self._events)

    # -- ingest ---------------------------------------------------------------

    def _fallback_id(self, raw) -> str:
        if isinstance(raw, dict) and raw.get("id"):
            return str(raw["id"])
        self._fallback_counter += 1
        return f"invalid-{self._fallback_counter}"

    def submit(self, raw) -> str:
        """Run the ingest stages for one raw record and queue card generation.

        Returns the alert id. Card completion is observed later through
        drain/flush; every failure becomes a Failed event rather than an
        exception.
        """
        with self._cond:
            try:
                alert = parse_alert(raw)
            except AlertParseError as exc:
                aid = self._fallback_id(raw)
                self._emit(Stage.INGESTED, aid, {})
                self._emit(Stage.FAILED, aid, {"stage": "parse", "error": str(exc)})
                return aid

            aid = alert.id
            self._emit(
                Stage.INGESTED, aid, {"priority": alert.priority, "title": alert.title}
            )
            vec = embed(self.lexicon, alert_text(alert))

            try:
                verdict = self._dedup.check_and_admit(alert, vec)
            except OutOfOrderTimestamp as exc:
                self._emit(Stage.FAILED, aid, {"stage": "dedup", "error": str(exc)})
                return aid
            if verdict.is_duplicate:
                self._emit(
                    Stage.DEDUPLICATED,
                    aid,
                    {"matched_id": verdict.matched_id, "similarity": verdict.similarity},
                )
                return aid

            if vec.is_zero:
                # unembeddable alerts go to the analyst, never silently benign
                label = TriageLabel.SUSPICIOUS
            else:
                try:
                    label = classify(self.training, self.knn_config, vec, alert.timestamp)
                except Exception as exc:
                    self._emit(Stage.FAILED, aid, {"stage": "classify", "error": str(exc)})
                    return aid
            if label is TriageLabel.BENIGN:
                self._emit(Stage.CLASSIFIED_BENIGN, aid, {})
                return aid
            self._emit(Stage.CLASSIFIED_SUSPICIOUS, aid, {})

            try:
                record_alert(self.graph, alert, vec)
            except GraphError as exc:
                self._emit(Stage.FAILED, aid, {"stage": "graph", "error": str(exc)})
                return aid

            self._alerts[aid] = alert
            snapshot = self.graph.snapshot()
            future = self._executor.submit(self._build_card, alert, vec, snapshot)
            self._pending.append((aid, future))
        self._drain_completed()
        return aid

    def _build_card(self, alert: Alert, vec, snapshot: LayeredGraph):
        bundle: ContextBundle = retrieve(snapshot, self.retrieval_config, alert, vec)
        card = generate_card(
            self.provider, self.template, alert, bundle, model=self.model
        )
        return card, list(bundle.related_alerts)

    def _pump(self) -> None:
        # callers hold self._cond; emits results for completed head tasks
        while self._pending and self._pending[0][1].done():
            aid, future = self._pending.popleft()
            try:
                card, related = future.result()
            except Exception as exc:
                self._emit(Stage.FAILED, aid, {"stage": "card", "error": str(exc)})
            else:
                self._cards[aid] = card
                self._related[aid] = related
                self._emit(Stage.CARD_READY, aid, card.to_record())

    def _drain_completed(self) -> None:
        with self._cond:
            self._pump()

    def _drain_until(self, done: Callable[[], bool]) -> None:
        while True:
            with self._cond:
                self._pump()
                if done():
                    return
                head = self._pending[0][1] if self._pending else None
            if head is None:
                return
            concurrent.futures.wait([head])

    def flush(self) -> None:
        """Block until every queued card task has resolved and its event is out."""
        self._drain_until(lambda: not self._pending)

    def process_alert(self, raw) -> list[PipelineEvent]:
        """Synchronous entry: ingest one record, wait for its card if one was
        queued, and return the events it produced."""
        with self._cond:
            seq_before = self._events[-1].seq if self._events else 0
        aid = self.submit(raw)
        self._drain_until(lambda: all(p != aid for p, _ in self._pending))
        with self._cond:
            return [e for e in self._events if e.seq > seq_before and e.alert_id == aid]

    # -- decisions and feedback -------------------------------------------------

    def card_for(self, alert_id: str) -> SuggestionCard:
        with self._cond:
            card = self._cards.get(alert_id)
        if card is None:
            raise UnknownAlert(alert_id)
        return card

    def card_view(self, alert_id: str) -> dict:
        """Card plus its decision state, for the console."""
        with self._cond:
            card = self._cards.get(alert_id)
            if card is None:
                raise UnknownAlert(alert_id)
            decision = self._decisions.get(alert_id)
            ticket = self._tickets.get(alert_id)
            return {
                "card": card.to_record(),
                "related_alert_ids": list(self._related.get(alert_id, [])),
                "decision": decision.to_record() if decision else None,
                "ticket": ticket.to_record() if ticket else None,
            }

    def decision_for(self, alert_id: str) -> Decision | None:
        with self._cond:
            return self._decisions.get(alert_id)

    def feedback_for(self, alert_id: str) -> list[Feedback]:
        with self._cond:
            return [f for f in self._feedback if f.alert_id == alert_id]

    def submit_decision(self, decision: Decision) -> CaseTicket | None:
        """Record an analyst verdict; Approve opens (and links) a case ticket.

        A failed Approve emits a Failed event and raises without recording
        the decision, so the analyst can retry; the idempotency key keeps the
        retry from opening a second ticket.
        """
        with self._cond:
            if decision.alert_id not in self._cards:
                raise UnknownAlert(decision.alert_id)
            if decision.alert_id in self._decisions:
                raise AlreadyDecided(decision.alert_id)

            if decision.verdict is Verdict.DISMISS:
                self._decisions[decision.alert_id] = decision
                _append_jsonl(self._decisions_path, decision.to_record())
                return None

            card = self._cards[decision.alert_id]
            alert = self._alerts[decision.alert_id]
            try:
                ticket = create_ticket(self.cases, card, alert)
                link_ticket(
                    self.cases,
                    ticket.ticket_id,
                    self._related.get(decision.alert_id, []),
                )
            except CaseError as exc:
                self._emit(
                    Stage.FAILED,
                    decision.alert_id,
                    {"stage": "decision", "error": str(exc)},
                )
                raise

            try:
                record_ticket(
                    self.graph,
                    ticket.ticket_id,
                    decision.alert_id,
                    ticket.title,
                    card.summary,
                )
            except GraphError:
                # replay of an idempotent create: ticket node already present
                pass

            self._decisions[decision.alert_id] = decision
            self._tickets[decision.alert_id] = ticket
            _append_jsonl(self._decisions_path, decision.to_record())
            self._emit(
                Stage.TICKET_CREATED,
                decision.alert_id,
                {"ticket_id": ticket.ticket_id, "status": ticket.status.value},
            )
            return ticket

    def submit_feedback(self, feedback: Feedback) -> Feedback:
        if (
            isinstance(feedback.rating, bool)
            or not isinstance(feedback.rating, int)
            or not 1 <= feedback.rating <= 5
        ):
            raise RatingOutOfRange(f"rating must be an integer in [1, 5], got {feedback.rating!r}")
        with self._cond:
            if feedback.alert_id not in self._cards:
                raise UnknownAlert(feedback.alert_id)
            self._feedback.append(feedback)
            _append_jsonl(self._feedback_path, feedback.to_record())
            self._emit(Stage.FEEDBACK_RECORDED, feedback.alert_id, {"rating": feedback.rating})
            return feedback

    # -- replay ---------------------------------------------------------------

    def replay(
        self,
        path: str | Path,
        speed: float = 0.0,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> RunReport:
        """Feed a newline-delimited alert file through the pipeline, honoring
        inter-arrival gaps scaled by ``speed`` (0 disables pacing). Returns
        stage counts for this run only."""
        if speed < 0:
            raise ValueError("speed factor must be >= 0")
        with self._cond:
            seq_before = self._events[-1].seq if self._events else 0

        prev_ts: datetime | None = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if speed > 0:
                    ts = _record_timestamp(line)
                    if ts is not None and prev_ts is not None:
                        gap = (ts - prev_ts).total_seconds()
                        if gap > 0:
                            sleeper(gap * speed)
                    if ts is not None:
                        prev_ts = ts
                self.submit(line)
        self.flush()

        with self._cond:
            return RunReport.from_events([e for e in self._events if e.seq > seq_before])

    def close(self) -> None:
        self.flush()
        self._executor.shutdown(wait=True)


def _record_timestamp(line: str) -> datetime | None:
    try:
        doc = json.loads(line)
        return parse_timestamp(doc["timestamp"])
    except Exception:
        return None
