import httpx
import pytest

from conftest import make_alert
from cyberally.cases import (
    BackendRejected,
    BackendUnavailable,
    CardMismatch,
    FakeCaseBackend,
    HttpCaseBackend,
    TicketStatus,
    UnknownTicket,
    create_ticket,
    idempotency_key,
    link_ticket,
    parse_body_actions,
    ticket_body,
    ticket_title,
)
from cyberally.suggestions import ActionItem, SuggestionCard

ALERT = make_alert("evt-9", 0.0, "breach attempt on db host", priority=8)


def card(alert_id="evt-9", actions=None, digest=None):
    if actions is None:
        actions = [
            ActionItem("Check the log", "grep fail /var/log/auth.log"),
            ActionItem("Escalate to on-call"),
        ]
    return SuggestionCard(
        alert_id=alert_id,
        summary="Likely brute force against the db host.",
        actions=actions,
        reasoning="Repeated failures from one source.",
        context_digest=digest or {},
    )


def test_idempotency_key_shape():
    key = idempotency_key("evt-9", "body text")
    assert len(key) == 32
    assert key == idempotency_key("evt-9", "body text")
    assert key != idempotency_key("evt-9", "body text!")
    assert key != idempotency_key("evt-8", "body text")


def test_ticket_title_prefix_and_cap():
    assert ticket_title(ALERT) == "[P8] breach attempt on db host"
    long = make_alert("evt-9", 0.0, "x" * 300, priority=8)
    assert len(ticket_title(long)) == 120


def test_ticket_body_sections():
    digest = {
        "static": [{"node_id": "rule-a", "score": 0.875}],
        "dynamic": [],
        "related_alerts": ["evt-1"],
        "truncated": ["tech-z"],
    }
    body = ticket_body(card(digest=digest))
    lines = body.splitlines()
    assert lines[0] == "SUMMARY"
    assert "ACTIONS" in lines
    assert "1. Check the log" in lines
    assert "   $ grep fail /var/log/auth.log" in lines
    assert "2. Escalate to on-call" in lines
    assert "REASONING" in lines
    assert "CONTEXT DIGEST" in lines
    assert "static rule-a 0.875" in lines
    assert "related evt-1" in lines
    assert "truncated tech-z" in lines


def test_ticket_body_without_actions():
    body = ticket_body(card(actions=[]))
    assert "(none)" in body.splitlines()
    assert parse_body_actions(body) == []


def test_parse_body_actions_round_trip():
    c = card()
    assert parse_body_actions(ticket_body(c)) == [a.description for a in c.actions]


def test_parse_body_actions_ignores_numbered_reasoning():
    c = card()
    c = SuggestionCard(
        alert_id=c.alert_id,
        summary=c.summary,
        actions=c.actions,
        reasoning="1. this is not an action",
        context_digest={},
    )
    assert parse_body_actions(ticket_body(c)) == [a.description for a in c.actions]


def test_create_ticket_rejects_mismatched_card():
    backend = FakeCaseBackend()
    with pytest.raises(CardMismatch):
        create_ticket(backend, card(alert_id="other"), ALERT)


def test_fake_backend_sequential_ids_and_fields():
    backend = FakeCaseBackend()
    first = create_ticket(backend, card(), ALERT)
    second = create_ticket(
        backend, card(actions=[ActionItem("different")]), ALERT
    )
    assert first.ticket_id == "T-0001"
    assert second.ticket_id == "T-0002"
    assert first.alert_id == "evt-9"
    assert first.title == "[P8] breach attempt on db host"
    assert first.status is TicketStatus.OPEN
    assert backend.ticket_count() == 2


def test_fake_backend_idempotent_replay():
    backend = FakeCaseBackend()
    first = create_ticket(backend, card(), ALERT)
    again = create_ticket(backend, card(), ALERT)
    assert again.ticket_id == first.ticket_id
    assert backend.create_calls == 2
    assert backend.ticket_count() == 1


def test_fake_backend_fail_before_commit_then_retry():
    backend = FakeCaseBackend()
    backend.fail_next()
    with pytest.raises(BackendUnavailable):
        create_ticket(backend, card(), ALERT)
    assert backend.ticket_count() == 0
    ticket = create_ticket(backend, card(), ALERT)
    assert ticket.ticket_id == "T-0001"
    assert backend.ticket_count() == 1


def test_fake_backend_fail_after_commit_then_retry():
    backend = FakeCaseBackend()
    backend.fail_after_commit_next()
    with pytest.raises(BackendUnavailable):
        create_ticket(backend, card(), ALERT)
    # the ticket committed even though the caller saw a failure
    assert backend.ticket_count() == 1
    ticket = create_ticket(backend, card(), ALERT)
    assert ticket.ticket_id == "T-0001"
    assert backend.ticket_count() == 1
    assert backend.create_calls == 2


def test_fake_backend_links_dedup():
    backend = FakeCaseBackend()
    ticket = create_ticket(backend, card(), ALERT)
    assert link_ticket(backend, ticket.ticket_id, ["a", "b"]) == 2
    assert link_ticket(backend, ticket.ticket_id, ["b", "c"]) == 3
    assert backend.links(ticket.ticket_id) == ["a", "b", "c"]
    with pytest.raises(UnknownTicket):
        backend.link_alerts("T-9999", ["a"])


def test_fake_backend_get_ticket():
    backend = FakeCaseBackend()
    ticket = create_ticket(backend, card(), ALERT)
    assert backend.get_ticket(ticket.ticket_id) == ticket
    with pytest.raises(UnknownTicket):
        backend.get_ticket("T-9999")


def test_ticket_record_shape():
    backend = FakeCaseBackend()
    record = create_ticket(backend, card(), ALERT).to_record()
    assert record["ticket_id"] == "T-0001"
    assert record["status"] == "Open"
    assert record["created_at"].endswith("+00:00")


def test_status_from_wire():
    assert TicketStatus.from_wire("open") is TicketStatus.OPEN
    assert TicketStatus.from_wire("INPROGRESS") is TicketStatus.IN_PROGRESS
    with pytest.raises(BackendRejected):
        TicketStatus.from_wire("Resolved")


def _http_backend(handler, **kwargs):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    sleeps = []
    backend = HttpCaseBackend(
        "http://cases.test/", client=client, sleeper=sleeps.append, **kwargs
    )
    return backend, sleeps


def test_http_backend_create_ticket():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(
            201, json={"ticket_id": "T-77", "status": "open", "created_at": "2025-06-01T12:00:00Z"}
        )

    backend, sleeps = _http_backend(handler, token="tok")
    ticket = create_ticket(backend, card(), ALERT)
    assert ticket.ticket_id == "T-77"
    assert ticket.status is TicketStatus.OPEN
    assert seen["url"] == "http://cases.test/tickets"
    assert seen["auth"] == "Bearer tok"
    assert sleeps == []


def test_http_backend_token_from_env(monkeypatch):
    monkeypatch.setenv("CYBERALLY_CASES_TOKEN", "envtok")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(201, json={"ticket_id": "T-1", "status": "Open"})

    backend, _ = _http_backend(handler)
    create_ticket(backend, card(), ALERT)
    assert seen["auth"] == "Bearer envtok"


def test_http_backend_retries_then_succeeds():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(503)
        return httpx.Response(201, json={"ticket_id": "T-2", "status": "Open"})

    backend, sleeps = _http_backend(handler)
    ticket = create_ticket(backend, card(), ALERT)
    assert ticket.ticket_id == "T-2"
    assert sleeps == [1.0, 2.0]


def test_http_backend_gives_up():
    def handler(request):
        return httpx.Response(500)

    backend, sleeps = _http_backend(handler)
    with pytest.raises(BackendUnavailable):
        create_ticket(backend, card(), ALERT)
    assert sleeps == [1.0, 2.0]


def test_http_backend_404_maps_to_unknown_ticket():
    def handler(request):
        return httpx.Response(404)

    backend, sleeps = _http_backend(handler)
    with pytest.raises(UnknownTicket):
        backend.get_ticket("T-404")
    assert sleeps == []


def test_http_backend_rejects_client_error():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(400, text="no")

    backend, sleeps = _http_backend(handler)
    with pytest.raises(BackendRejected):
        create_ticket(backend, card(), ALERT)
    assert calls["n"] == 1
    assert sleeps == []


def test_http_backend_link_and_get():
    def handler(request):
        if request.url.path.endswith("/links"):
            return httpx.Response(200, json={"linked": 4})
        return httpx.Response(
            200,
            json={
                "ticket_id": "T-5",
                "alert_id": "evt-9",
                "title": "t",
                "body": "b",
                "status": "InProgress",
            },
        )

    backend, _ = _http_backend(handler)
    assert backend.link_alerts("T-5", ["a", "b"]) == 4
    ticket = backend.get_ticket("T-5")
    assert ticket.status is TicketStatus.IN_PROGRESS
    assert ticket.alert_id == "evt-9"


def test_http_backend_unknown_status_rejected():
    def handler(request):
        return httpx.Response(200, json={"ticket_id": "T-6", "status": "Weird"})

    backend, _ = _http_backend(handler)
    with pytest.raises(BackendRejected):
        backend.get_ticket("T-6")
