"""Case-ticket backend: HTTP client, in-process fake, idempotency rules.

Approving a suggestion opens a ticket in an external case system, populated
from the card. Creation is idempotent on a key derived from the alert and
the exact ticket body, so a retry after a lost response cannot open a
second ticket. The ticket body's action section is machine-parseable so
the card's actions can be recovered from it verbatim.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Callable, Protocol

import httpx

from .alerts import Alert, format_timestamp, now_utc, parse_timestamp
from .suggestions import SuggestionCard

CASES_TOKEN_ENV_VAR = "CYBERALLY_CASES_TOKEN"


class CaseError(Exception):
    pass


class BackendUnavailable(CaseError):
    """Transport failure or 5xx/429 that exhausted retries."""


class BackendRejected(CaseError):
    """Non-success response that retrying will not fix."""


class UnknownTicket(CaseError):
    pass


class CardMismatch(CaseError):
    pass


class TicketStatus(Enum):
    OPEN = "Open"
    IN_PROGRESS = "InProgress"
    CLOSED = "Closed"

    @classmethod
    def from_wire(cls, value: str) -> "TicketStatus":
        for status in cls:
            if status.value.lower() == str(value).lower():
                return status
        raise BackendRejected(f"unknown ticket status {value!r}")


@dataclass(frozen=True)
class CaseTicket:
    ticket_id: str
    alert_id: str
    title: str
    body: str
    status: TicketStatus
    created_at: datetime

    def to_record(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "alert_id": self.alert_id,
            "title": self.title,
            "body": self.body,
            "status": self.status.value,
            "created_at": format_timestamp(self.created_at),
        }


def idempotency_key(alert_id: str, card_content: str) -> str:
    digest = hashlib.sha256(f"{alert_id}\n{card_content}".encode("utf-8")).hexdigest()
    return digest[:32]


def ticket_title(alert: Alert) -> str:
    return f"[P{alert.priority}] {alert.title}"[:120]


def ticket_body(card: SuggestionCard) -> str:
    """Ticket text: summary, enumerated actions (with commands), reasoning,
    and the context digest for audit."""
    lines = ["SUMMARY", card.summary, "", "ACTIONS"]
    if card.actions:
        for i, item in enumerate(card.actions, 1):
            lines.append(f"{i}. {item.description}")
            if item.command:
                lines.append(f"   $ {item.command}")
    else:
        lines.append("(none)")
    lines.extend(["", "REASONING", card.reasoning, "", "CONTEXT DIGEST"])
    digest = card.context_digest or {}
    for layer in ("static", "dynamic"):
        for entry in digest.get(layer, []):
            lines.append(f"{layer} {entry['node_id']} {entry['score']!r}")
    for rid in digest.get("related_alerts", []):
        lines.append(f"related {rid}")
    for nid in digest.get("truncated", []):
        lines.append(f"truncated {nid}")
    return "\n".join(lines)


_ACTION_LINE = re.compile(r"^\d+\. (.*)$")


def parse_body_actions(body: str) -> list[str]:
    """Recover the action descriptions from a ticket body."""
    descriptions = []
    in_actions = False
    for line in body.splitlines():
        if line.strip() == "ACTIONS":
            in_actions = True
            continue
        if in_actions:
            if line.strip() in ("REASONING", "CONTEXT DIGEST"):
                break
            match = _ACTION_LINE.match(line.strip())
            if match:
                descriptions.append(match.group(1))
    return descriptions


class CaseBackend(Protocol):
    def create_ticket(
        self, title: str, body: str, alert_id: str, idempotency_key: str
    ) -> CaseTicket: ...

    def link_alerts(self, ticket_id: str, alert_ids: list[str]) -> int: ...

    def get_ticket(self, ticket_id: str) -> CaseTicket: ...


def create_ticket(backend: CaseBackend, card: SuggestionCard, alert: Alert) -> CaseTicket:
    """Open (or, on retry, re-fetch) the ticket for an approved card."""
    if card.alert_id != alert.id:
        raise CardMismatch(f"card is for alert {card.alert_id!r}, not {alert.id!r}")
    body = ticket_body(card)
    key = idempotency_key(alert.id, body)
    return backend.create_ticket(
        title=ticket_title(alert), body=body, alert_id=alert.id, idempotency_key=key
    )


def link_ticket(backend: CaseBackend, ticket_id: str, related_alert_ids: list[str]) -> int:
    """Record relation links from a ticket to prior alerts; returns how many
    links the ticket now has."""
    return backend.link_alerts(ticket_id, list(related_alert_ids))


class FakeCaseBackend:
    """In-memory stand-in for the case system, with failure injection.

    ``fail_next(n)`` makes the next n create calls raise before committing.
    ``fail_after_commit_next(n)`` commits the ticket and then raises, which
    is the lost-response case that idempotent retries must absorb.
    """

    def __init__(self):
        self._tickets: dict[str, CaseTicket] = {}
        self._by_key: dict[str, str] = {}
        self._links: dict[str, list[str]] = {}
        self._counter = 0
        self._fail_before = 0
        self._fail_after_commit = 0
        self.create_calls = 0

    def fail_next(self, n: int = 1) -> None:
        self._fail_before += n

    def fail_after_commit_next(self, n: int = 1) -> None:
        self._fail_after_commit += n

    def create_ticket(
        self, title: str, body: str, alert_id: str, idempotency_key: str
    ) -> CaseTicket:
        self.create_calls += 1
        if self._fail_before > 0:
            self._fail_before -= 1
            raise BackendUnavailable("injected failure before commit")
        existing = self._by_key.get(idempotency_key)
        if existing is not None:
            return self._tickets[existing]
        self._counter += 1
        ticket = CaseTicket(
            ticket_id=f"T-{self._counter:04d}",
            alert_id=alert_id,
            title=title,
            body=body,
            status=TicketStatus.OPEN,
            created_at=now_utc(),
        )
        self._tickets[ticket.ticket_id] = ticket
        self._by_key[idempotency_key] = ticket.ticket_id
        self._links[ticket.ticket_id] = []
        if self._fail_after_commit > 0:
            self._fail_after_commit -= 1
            raise BackendUnavailable("injected failure after commit")
        return ticket

    def link_alerts(self, ticket_id: str, alert_ids: list[str]) -> int:
        if ticket_id not in self._tickets:
            raise UnknownTicket(ticket_id)
        links = self._links[ticket_id]
        for alert_id in alert_ids:
            if alert_id not in links:
                links.append(alert_id)
        return len(links)

    def get_ticket(self, ticket_id: str) -> CaseTicket:
        try:
            return self._tickets[ticket_id]
        except KeyError:
            raise UnknownTicket(ticket_id) from None

    def links(self, ticket_id: str) -> list[str]:
        if ticket_id not in self._tickets:
            raise UnknownTicket(ticket_id)
        return list(self._links[ticket_id])

    def ticket_count(self) -> int:
        return len(self._tickets)


class HttpCaseBackend:
    """Case-system client over HTTP.

    POST /tickets with ``{title, body, alert_id, idempotency_key}`` yields
    ``{ticket_id, status}``; POST /tickets/{id}/links takes ``{alert_ids}``;
    GET /tickets/{id} returns the ticket record. Transport errors and
    429/5xx retry twice with 1 s then 2 s backoff, which the idempotency key
    keeps safe. The bearer token comes from the constructor or
    CYBERALLY_CASES_TOKEN.
    """

    RETRY_BACKOFF = (1.0, 2.0)

    def __init__(
        self,
        base_url: str,
        token: str | None = None,
        timeout: float = 30.0,
        sleeper: Callable[[float], None] = time.sleep,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.token = token if token is not None else os.environ.get(CASES_TOKEN_ENV_VAR)
        self._sleeper = sleeper
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _request(self, method: str, path: str, json_body: dict | None = None) -> dict:
        url = f"{self.base_url}{path}"
        attempts = len(self.RETRY_BACKOFF) + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                resp = self._client.request(
                    method, url, json=json_body, headers=self._headers()
                )
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if resp.status_code in (200, 201):
                    return resp.json()
                if resp.status_code == 404:
                    raise UnknownTicket(path)
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = BackendUnavailable(f"upstream status {resp.status_code}")
                else:
                    raise BackendRejected(
                        f"upstream status {resp.status_code}: {resp.text[:200]}"
                    )
            if attempt < attempts - 1:
                self._sleeper(self.RETRY_BACKOFF[attempt])
        raise BackendUnavailable(
            f"{method} {path} failed after {attempts} attempts: {last_error}"
        )

    def create_ticket(
        self, title: str, body: str, alert_id: str, idempotency_key: str
    ) -> CaseTicket:
        doc = self._request(
            "POST",
            "/tickets",
            {
                "title": title,
                "body": body,
                "alert_id": alert_id,
                "idempotency_key": idempotency_key,
            },
        )
        created = doc.get("created_at")
        return CaseTicket(
            ticket_id=str(doc["ticket_id"]),
            alert_id=alert_id,
            title=title,
            body=body,
            status=TicketStatus.from_wire(doc.get("status", "Open")),
            created_at=parse_timestamp(created) if created else now_utc(),
        )

    def link_alerts(self, ticket_id: str, alert_ids: list[str]) -> int:
        doc = self._request(
            "POST", f"/tickets/{ticket_id}/links", {"alert_ids": list(alert_ids)}
        )
        return int(doc.get("linked", len(alert_ids)))

    def get_ticket(self, ticket_id: str) -> CaseTicket:
        doc = self._request("GET", f"/tickets/{ticket_id}")
        created = doc.get("created_at")
        return CaseTicket(
            ticket_id=str(doc["ticket_id"]),
            alert_id=str(doc.get("alert_id", "")),
            title=str(doc.get("title", "")),
            body=str(doc.get("body", "")),
            status=TicketStatus.from_wire(doc.get("status", "Open")),
            created_at=parse_timestamp(created) if created else now_utc(),
        )
