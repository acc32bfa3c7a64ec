"""
Idempotent case tickets from approved cards
===========================================

"""

from cyberally.alerts import parse_alert
from cyberally.cases import (
    BackendUnavailable,
    FakeCaseBackend,
    create_ticket,
    parse_body_actions,
)
from cyberally.suggestions import ActionItem, SuggestionCard

alert = parse_alert({
    "id": "evt-9",
    "timestamp": "2025-06-01T12:00:00+00:00",
    "rule": {"id": "rule-5710", "level": 9, "description": "sshd brute force trying to get access"},
    "full_log": "",
    "agent": {"name": "web-01"},
})
card = SuggestionCard(
    alert_id="evt-9",
    summary="Likely ssh brute force against web-01.",
    actions=[
        ActionItem("Review recent auth failures", "grep 'Failed password' /var/log/auth.log"),
        ActionItem("Block the source at the firewall"),
    ],
    reasoning="Burst of failures for one account from a single source.",
)

backend = FakeCaseBackend()
ticket = create_ticket(backend, card, alert)
print("created:", ticket.ticket_id, ticket.title)

# The action section is machine-parseable: the descriptions round-trip out
# of the ticket body verbatim.
print("actions recovered:", parse_body_actions(ticket.body))

# Creation is idempotent on a key derived from (alert id, exact body). The
# lost-response case: the backend commits, the response never arrives, the
# analyst retries. Same ticket, no duplicate.
backend.fail_after_commit_next()
try:
    create_ticket(backend, card, alert)
except BackendUnavailable as exc:
    print("first attempt:", exc)
retry = create_ticket(backend, card, alert)
print("retry returned:", retry.ticket_id, "| tickets in system:", backend.ticket_count())
