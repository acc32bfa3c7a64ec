"""Alert data model and newline-delimited record parsing.

Incoming records follow a Wazuh-style layout: one JSON object per line with
``timestamp``, ``rule.level``, ``rule.id``, ``rule.description``, ``agent.name``
and optional ``id`` / ``full_log``. The same format is used for replay files
and the ingest endpoint body.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

PRIORITY_MIN = 0
PRIORITY_MAX = 15


class AlertParseError(ValueError):
    """Base class for ingest parsing failures."""


class MalformedRecord(AlertParseError):
    """Record text is not a well-formed structured record."""


class MissingField(AlertParseError):
    """A required field is absent from the record."""


class PriorityOutOfRange(AlertParseError):
    """Priority is outside the supported 0..15 range."""


class TriageLabel(Enum):
    BENIGN = "benign"
    SUSPICIOUS = "suspicious"


@dataclass(frozen=True)
class Alert:
    """One SIEM alert record.

    ``priority`` is the source rule level, kept verbatim (0..15).
    ``full_log`` may be empty; ``title`` never is.
    """

    id: str
    timestamp: datetime
    priority: int
    rule_id: str
    title: str
    full_log: str
    agent: str

    def to_record(self) -> dict:
        """Render back to the wire-format dict (nested rule/agent objects)."""
        return {
            "id": self.id,
            "timestamp": format_timestamp(self.timestamp),
            "rule": {
                "id": self.rule_id,
                "level": self.priority,
                "description": self.title,
            },
            "full_log": self.full_log,
            "agent": {"name": self.agent},
        }


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp to a UTC instant with millisecond precision."""
    if not isinstance(raw, str) or not raw:
        raise MissingField("timestamp missing or empty")
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedRecord(f"unparseable timestamp: {raw!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    # truncate below-millisecond digits; the model is millisecond precision
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat(timespec="milliseconds")


def now_utc() -> datetime:
    return datetime.now(timezone.utc)


def _content_id(timestamp: datetime, rule_id: str, agent: str, title: str) -> str:
    basis = "|".join([format_timestamp(timestamp), rule_id, agent, title])
    return "w" + hashlib.sha256(basis.encode("utf-8")).hexdigest()[:16]


def parse_alert(raw: str | dict) -> Alert:
    """Parse one wire-format record (JSON text or already-decoded dict).

    Missing ``full_log`` becomes the empty string. A missing ``id`` is filled
    with a deterministic content hash so replaying the same record always
    yields the same id.
    """
    if isinstance(raw, str):
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid record text: {exc}") from exc
    else:
        record = raw
    if not isinstance(record, dict):
        raise MalformedRecord("record is not an object")

    rule = record.get("rule")
    if not isinstance(rule, dict):
        raise MissingField("rule object missing")
    agent_obj = record.get("agent")
    if not isinstance(agent_obj, dict) or not agent_obj.get("name"):
        raise MissingField("agent.name missing")

    title = rule.get("description")
    if not isinstance(title, str) or not title.strip():
        raise MissingField("rule.description (title) missing or empty")
    if "timestamp" not in record:
        raise MissingField("timestamp missing")
    timestamp = parse_timestamp(record["timestamp"])

    level = rule.get("level")
    if level is None:
        raise MissingField("rule.level missing")
    if not isinstance(level, int) or isinstance(level, bool):
        raise MalformedRecord(f"rule.level is not an integer: {level!r}")
    if not PRIORITY_MIN <= level <= PRIORITY_MAX:
        raise PriorityOutOfRange(f"priority {level} outside [{PRIORITY_MIN}, {PRIORITY_MAX}]")

    rule_id = rule.get("id")
    if rule_id is None:
        raise MissingField("rule.id missing")

    agent = str(agent_obj["name"])
    full_log = record.get("full_log") or ""
    alert_id = record.get("id") or _content_id(timestamp, str(rule_id), agent, title)

    return Alert(
        id=str(alert_id),
        timestamp=timestamp,
        priority=level,
        rule_id=str(rule_id),
        title=title,
        full_log=str(full_log),
        agent=agent,
    )


def alert_text(a: Alert) -> str:
    """Canonical text used for embedding: title and full_log joined by one space.

    An empty full_log yields the title alone, with no trailing separator.
    """
    if not a.full_log:
        return a.title
    return a.title + " " + a.full_log


def read_alert_file(path) -> list[Alert]:
    """Parse a newline-delimited alert file; blank lines are skipped."""
    alerts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                alerts.append(parse_alert(line))
    return alerts
