"""
The full loop: replay, cards, decisions, feedback
=================================================

"""

from cyberally.alerts import now_utc
from cyberally.config import DEMO_ALERTS_FILENAME, bundled_data_dir, build_pipeline, load_config
from cyberally.pipeline import Decision, Feedback, Stage, Verdict

# The bundled demo profile is fully offline: scripted suggestions, in-memory
# case backend, packaged lexicon/graph/training.
data = bundled_data_dir()
pipe = build_pipeline(load_config(data / "demo_config.yaml"))
try:
    report = pipe.replay(data / DEMO_ALERTS_FILENAME)
    print("replay:", report.to_dict())

    # Ingested alerts are conserved across the terminal stages; carded ones
    # wait for an analyst.
    carded = [e.alert_id for e in pipe.events_since(0) if e.stage is Stage.CARD_READY]
    print("cards awaiting review:", carded)

    first, second = carded[0], carded[1]
    ticket = pipe.submit_decision(
        Decision(alert_id=first, verdict=Verdict.APPROVE, analyst="demo", at=now_utc())
    )
    print(f"approved {first} -> ticket {ticket.ticket_id} ({ticket.status.value})")

    pipe.submit_decision(
        Decision(alert_id=second, verdict=Verdict.DISMISS, analyst="demo", at=now_utc())
    )
    print(f"dismissed {second}")

    pipe.submit_feedback(
        Feedback(alert_id=first, rating=4, comment="good call", analyst="demo", at=now_utc())
    )
    print("final report:", pipe.report().to_dict())
finally:
    pipe.close()
