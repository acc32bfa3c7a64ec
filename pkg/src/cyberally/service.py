"""HTTP surface for the pipeline: ingest, event stream, cards, decisions.

The event stream is server-sent events with ``id:`` set to the pipeline
sequence number, so clients resume with the standard ``Last-Event-ID``
header (or an explicit ``?after=`` query, which wins when both are given).
``?max_events=`` bounds the stream, which finite consumers like tests and
curl use to terminate cleanly.
"""

from __future__ import annotations

import json
from typing import Iterator

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from .alerts import now_utc
from .cases import CaseError
from .pipeline import (
    AlreadyDecided,
    Decision,
    Feedback,
    Pipeline,
    RatingOutOfRange,
    UnknownAlert,
    Verdict,
)

_KEEPALIVE_SECONDS = 10.0


class DecisionIn(BaseModel):
    alert_id: str
    verdict: str
    analyst: str = "analyst"


class FeedbackIn(BaseModel):
    alert_id: str
    rating: int = Field(description="integer 1..5")
    comment: str | None = None
    analyst: str = "analyst"


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def _format_event(record: dict) -> str:
    data = json.dumps(record, sort_keys=True)
    return f"id: {record['seq']}\nevent: {record['stage']}\ndata: {data}\n\n"


def _event_stream(
    pipe: Pipeline, after: int, max_events: int | None
) -> Iterator[str]:
    cursor = after
    sent = 0
    while True:
        events = pipe.wait_events(cursor, timeout=_KEEPALIVE_SECONDS)
        if not events:
            yield ": keepalive\n\n"
            continue
        for event in events:
            cursor = event.seq
            yield _format_event(event.to_record())
            sent += 1
            if max_events is not None and sent >= max_events:
                return


def create_app(pipeline: Pipeline) -> FastAPI:
    app = FastAPI(title="cyberally", docs_url=None, redoc_url=None)
    app.state.pipeline = pipeline

    # The analyst console is served as static files from whatever origin is
    # convenient; the service itself binds localhost, so reflect any origin.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/alerts")
    def post_alert(record: dict = Body(...)):
        events = pipeline.process_alert(record)
        alert_id = events[0].alert_id if events else None
        return {"alert_id": alert_id, "events": [e.to_record() for e in events]}

    @app.post("/alerts/batch")
    def post_alerts_batch(payload: list[dict] | dict = Body(...)):
        records = payload.get("alerts") if isinstance(payload, dict) else payload
        if not isinstance(records, list):
            return _error(422, "expected a list of alert records (or {alerts: [...]})")
        results = []
        for record in records:
            events = pipeline.process_alert(record)
            results.append(
                {
                    "alert_id": events[0].alert_id if events else None,
                    "events": [e.to_record() for e in events],
                }
            )
        return {"count": len(results), "results": results}

    @app.get("/events")
    def get_events(
        request: Request,
        after: int | None = None,
        max_events: int | None = None,
    ):
        if after is None:
            header = request.headers.get("last-event-id")
            try:
                after = int(header) if header else 0
            except ValueError:
                after = 0
        return StreamingResponse(
            _event_stream(pipeline, after, max_events),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    @app.get("/cards/{alert_id}")
    def get_card(alert_id: str):
        try:
            view = pipeline.card_view(alert_id)
        except UnknownAlert:
            return _error(404, f"no card for alert {alert_id!r}")
        view["feedback"] = [f.to_record() for f in pipeline.feedback_for(alert_id)]
        return view

    @app.post("/decisions")
    def post_decision(body: DecisionIn):
        try:
            verdict = Verdict(body.verdict.strip().title())
        except ValueError:
            return _error(422, f"verdict must be one of {[v.value for v in Verdict]}")
        decision = Decision(
            alert_id=body.alert_id,
            verdict=verdict,
            analyst=body.analyst,
            at=now_utc(),
        )
        try:
            ticket = pipeline.submit_decision(decision)
        except UnknownAlert:
            return _error(404, f"no card for alert {body.alert_id!r}")
        except AlreadyDecided:
            return _error(409, f"alert {body.alert_id!r} already decided")
        except CaseError as exc:
            return _error(502, f"case backend error: {exc}")
        return {
            "decision": decision.to_record(),
            "ticket": ticket.to_record() if ticket else None,
        }

    @app.post("/feedback")
    def post_feedback(body: FeedbackIn):
        feedback = Feedback(
            alert_id=body.alert_id,
            rating=body.rating,
            comment=body.comment or "",
            analyst=body.analyst,
            at=now_utc(),
        )
        try:
            pipeline.submit_feedback(feedback)
        except RatingOutOfRange as exc:
            return _error(422, str(exc))
        except UnknownAlert:
            return _error(404, f"no card for alert {body.alert_id!r}")
        return {"recorded": True, "alert_id": body.alert_id, "rating": body.rating}

    @app.get("/feedback/{alert_id}")
    def get_feedback(alert_id: str):
        return {
            "alert_id": alert_id,
            "feedback": [f.to_record() for f in pipeline.feedback_for(alert_id)],
        }

    @app.get("/report")
    def get_report():
        return pipeline.report().to_dict()

    return app
