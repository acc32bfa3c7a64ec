"""Suggestion cards: prompt assembly, chat providers, reply parsing.

A card is the analyst-facing unit: a summary, recommended action items with
optional shell commands, and the model's reasoning, plus an audit digest of
the graph context that went into the prompt. Replies must carry the three
section markers; replies without them degrade to a raw-text card rather
than being dropped, so the analyst always sees something.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import httpx

from .alerts import Alert, format_timestamp
from .retrieval import ContextBundle, ContextItem

SUMMARY_MARKER = "ALERT SUMMARY"
ACTIONS_MARKER = "RECOMMENDED ACTIONS"
REASONING_MARKER = "REASONING"

TOKEN_ENV_VAR = "CYBERALLY_LLM_TOKEN"

DEFAULT_MAX_PROMPT_CHARS = 8000


class SuggestionError(Exception):
    pass


class BundleMismatch(SuggestionError):
    pass


class ProviderUnavailable(SuggestionError):
    """Transport failure that exhausted retries."""


class ProviderRefusal(SuggestionError):
    """The provider finished without producing a usable completion."""


class MalformedResponse(SuggestionError):
    """Reply payload whose shape cannot carry any content at all."""


class TemplateError(ValueError):
    pass


# -- template and wire types ---------------------------------------------------

@dataclass(frozen=True)
class PromptTemplate:
    system_preamble: str
    section_markers: tuple[str, str, str] = (
        SUMMARY_MARKER,
        ACTIONS_MARKER,
        REASONING_MARKER,
    )

    def __post_init__(self):
        if len(set(self.section_markers)) != 3:
            raise TemplateError("section markers must be pairwise distinct")
        for marker in self.section_markers:
            if marker not in self.system_preamble:
                raise TemplateError(f"preamble does not mention marker {marker!r}")


def default_template() -> PromptTemplate:
    preamble = (
        "You assist a security analyst triaging alerts during a defensive "
        "exercise. Reply in plain text with exactly three sections, in "
        f"order, introduced by the marker lines {SUMMARY_MARKER!r}, "
        f"{ACTIONS_MARKER!r} and {REASONING_MARKER!r}. Under "
        f"{ACTIONS_MARKER!r} give short imperative items each starting "
        'with "- ", and put any shell command on its own line prefixed '
        'with "$ ". Keep the summary to two sentences.'
    )
    return PromptTemplate(system_preamble=preamble)


@dataclass(frozen=True)
class ProviderRequest:
    messages: tuple[dict, ...]
    model: str
    temperature: float = 0.0

    def __post_init__(self):
        if not self.messages or self.messages[0].get("role") != "system":
            raise TemplateError("first message must have the system role")

    def to_payload(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [dict(m) for m in self.messages],
        }


@dataclass(frozen=True)
class ProviderResponse:
    content: str
    finish_state: str = "stop"
    usage: dict = field(default_factory=dict)


# -- cards ----------------------------------------------------------------------

@dataclass
class ActionItem:
    description: str
    command: str | None = None

    def to_record(self) -> dict:
        return {"description": self.description, "command": self.command}

    @classmethod
    def from_record(cls, rec: dict) -> "ActionItem":
        return cls(description=rec["description"], command=rec.get("command"))


@dataclass
class SuggestionCard:
    alert_id: str
    summary: str
    actions: list[ActionItem] = field(default_factory=list)
    reasoning: str = ""
    context_digest: dict = field(default_factory=dict)
    provider_meta: dict = field(default_factory=dict)
    degraded: bool = False

    def render(self) -> str:
        """Marker-delimited text form; parse_response inverts it."""
        lines = [SUMMARY_MARKER, self.summary, "", ACTIONS_MARKER]
        for item in self.actions:
            lines.append(f"- {item.description}")
            if item.command:
                lines.append(f"$ {item.command}")
        lines.extend(["", REASONING_MARKER, self.reasoning])
        return "\n".join(lines)

    def to_record(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "summary": self.summary,
            "actions": [a.to_record() for a in self.actions],
            "reasoning": self.reasoning,
            "context_digest": self.context_digest,
            "provider_meta": self.provider_meta,
            "degraded": self.degraded,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SuggestionCard":
        return cls(
            alert_id=rec["alert_id"],
            summary=rec.get("summary", ""),
            actions=[ActionItem.from_record(a) for a in rec.get("actions", [])],
            reasoning=rec.get("reasoning", ""),
            context_digest=rec.get("context_digest", {}),
            provider_meta=rec.get("provider_meta", {}),
            degraded=bool(rec.get("degraded", False)),
        )


def _marker_at(line: str, marker: str) -> bool:
    return line.strip().rstrip(":").upper() == marker.upper()


def parse_response(
    alert_id: str,
    text: str,
    context_digest: dict | None = None,
    provider_meta: dict | None = None,
) -> SuggestionCard:
    """Parse a reply into a card by the three markers (matched at line start,
    case-insensitively). Replies missing a marker degrade to a card with the
    raw text preserved in ``reasoning``; nothing here raises for bad prose.

    Within the actions section, ``- `` lines open items and ``$ `` or fenced
    lines attach as the command of the most recent item (or open an item of
    their own when none is pending).
    """
    digest = context_digest or {}
    meta = provider_meta or {}

    lines = text.splitlines()
    marks: dict[str, int] = {}
    for i, line in enumerate(lines):
        for marker in (SUMMARY_MARKER, ACTIONS_MARKER, REASONING_MARKER):
            if marker not in marks and _marker_at(line, marker):
                marks[marker] = i

    ordered = (
        len(marks) == 3
        and marks[SUMMARY_MARKER] < marks[ACTIONS_MARKER] < marks[REASONING_MARKER]
    )
    if not ordered:
        first = next((ln.strip() for ln in lines if ln.strip()), "")
        return SuggestionCard(
            alert_id=alert_id,
            summary=first[:120] if first else "(empty reply)",
            reasoning=text.strip(),
            context_digest=digest,
            provider_meta=meta,
            degraded=True,
        )

    summary_lines = lines[marks[SUMMARY_MARKER] + 1 : marks[ACTIONS_MARKER]]
    action_lines = lines[marks[ACTIONS_MARKER] + 1 : marks[REASONING_MARKER]]
    reasoning_lines = lines[marks[REASONING_MARKER] + 1 :]

    actions: list[ActionItem] = []

    def attach_command(cmd: str) -> None:
        if actions and actions[-1].command is None:
            actions[-1].command = cmd
        else:
            actions.append(ActionItem(description=cmd, command=cmd))

    in_fence = False
    for ln in action_lines:
        stripped = ln.strip()
        if stripped.startswith("```"):
            in_fence = not in_fence
            continue
        if in_fence:
            if stripped:
                attach_command(stripped)
        elif stripped.startswith("- "):
            actions.append(ActionItem(description=stripped[2:].strip()))
        elif stripped.startswith("$ "):
            attach_command(stripped[2:].strip())

    summary = " ".join(ln.strip() for ln in summary_lines if ln.strip())
    if not summary:
        summary = "(no summary provided)"
    return SuggestionCard(
        alert_id=alert_id,
        summary=summary,
        actions=actions,
        reasoning="\n".join(reasoning_lines).strip(),
        context_digest=digest,
        provider_meta=meta,
        degraded=False,
    )


# -- prompt assembly -------------------------------------------------------------

def _alert_block(alert: Alert) -> list[str]:
    parts = [
        "ALERT",
        f"id: {alert.id}",
        f"timestamp: {format_timestamp(alert.timestamp)}",
        f"priority: {alert.priority}",
        f"rule: {alert.rule_id}",
        f"agent: {alert.agent}",
        f"title: {alert.title}",
    ]
    if alert.full_log:
        parts.append(f"log: {alert.full_log}")
    return parts


def _context_section(name: str, items: list[ContextItem]) -> list[str]:
    parts = [name]
    if not items:
        parts.append("(none)")
        return parts
    for item in items:
        parts.append(f"[{item.node_id} score={item.score:.4f}]")
        parts.append(item.excerpt)
    return parts


def _assemble(
    tmpl: PromptTemplate,
    alert: Alert,
    bundle: ContextBundle,
    model: str,
    temperature: float,
    max_chars: int,
) -> tuple[ProviderRequest, dict]:
    """Build the request and the audit digest together.

    When the assembled prompt would exceed ``max_chars``, context items are
    dropped one at a time starting from the lowest score (ties drop the
    lexicographically later node id) and the dropped ids are recorded."""
    if bundle.alert_id != alert.id:
        raise BundleMismatch(
            f"bundle is for alert {bundle.alert_id!r}, not {alert.id!r}"
        )

    static_items = list(bundle.static_items)
    dynamic_items = list(bundle.dynamic_items)
    truncated: list[str] = []
    instruction = (
        "Respond with three sections introduced by the marker lines "
        f"{tmpl.section_markers[0]!r}, {tmpl.section_markers[1]!r} and "
        f"{tmpl.section_markers[2]!r}. Start each action item with \"- \" "
        'and put any shell command on its own line prefixed with "$ ".'
    )

    def user_text() -> str:
        parts = _alert_block(alert)
        parts.append("")
        parts.extend(_context_section("STATIC CONTEXT", static_items))
        parts.append("")
        parts.extend(_context_section("DYNAMIC CONTEXT", dynamic_items))
        parts.append("")
        parts.append(instruction)
        return "\n".join(parts)

    text = user_text()
    while len(tmpl.system_preamble) + len(text) > max_chars and (
        static_items or dynamic_items
    ):
        pool = [("static", i) for i in static_items] + [
            ("dynamic", i) for i in dynamic_items
        ]
        lowest = min(item.score for _, item in pool)
        layer, victim = max(
            (p for p in pool if p[1].score == lowest), key=lambda p: p[1].node_id
        )
        if layer == "static":
            static_items.remove(victim)
        else:
            dynamic_items.remove(victim)
        truncated.append(victim.node_id)
        text = user_text()

    digest = {
        "static": [{"node_id": i.node_id, "score": i.score} for i in static_items],
        "dynamic": [{"node_id": i.node_id, "score": i.score} for i in dynamic_items],
        "related_alerts": list(bundle.related_alerts),
        "truncated": truncated,
    }
    request = ProviderRequest(
        messages=(
            {"role": "system", "content": tmpl.system_preamble},
            {"role": "user", "content": text},
        ),
        model=model,
        temperature=temperature,
    )
    return request, digest


def build_prompt(
    tmpl: PromptTemplate,
    alert: Alert,
    bundle: ContextBundle,
    model: str = "",
    temperature: float = 0.0,
    max_chars: int = DEFAULT_MAX_PROMPT_CHARS,
) -> ProviderRequest:
    request, _ = _assemble(tmpl, alert, bundle, model, temperature, max_chars)
    return request


# -- providers --------------------------------------------------------------------

class ChatProvider(Protocol):
    def complete(self, request: ProviderRequest) -> ProviderResponse: ...


_SUCCESS_FINISHES = ("stop", "")


class HttpChatProvider:
    """Chat-completions client over HTTP.

    POSTs ``{model, temperature, messages}`` to ``{base_url}/v1/chat/completions``
    and reads ``choices[0].message.content`` plus ``finish_reason`` and
    ``usage``. Transport errors and 429/5xx are retried twice with 1 s then
    2 s backoff; other statuses fail fast. The bearer token comes from the
    constructor or CYBERALLY_LLM_TOKEN.
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
        self.token = token if token is not None else os.environ.get(TOKEN_ENV_VAR)
        self._sleeper = sleeper
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        url = f"{self.base_url}/v1/chat/completions"
        attempts = len(self.RETRY_BACKOFF) + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                resp = self._client.post(
                    url, json=request.to_payload(), headers=self._headers()
                )
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if resp.status_code == 200:
                    return _parse_completion(resp.json())
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = ProviderUnavailable(
                        f"upstream status {resp.status_code}"
                    )
                else:
                    raise ProviderUnavailable(
                        f"upstream status {resp.status_code}: {resp.text[:200]}"
                    )
            if attempt < attempts - 1:
                self._sleeper(self.RETRY_BACKOFF[attempt])
        raise ProviderUnavailable(
            f"chat completion failed after {attempts} attempts: {last_error}"
        )


def _parse_completion(doc) -> ProviderResponse:
    try:
        choice = doc["choices"][0]
        content = choice["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse(
            f"unexpected completion payload: {str(doc)[:200]}"
        ) from None
    if not isinstance(content, str):
        raise MalformedResponse("completion content is not text")
    finish = choice.get("finish_reason") or "stop"
    usage = doc.get("usage") or {}
    return ProviderResponse(content=content, finish_state=finish, usage=dict(usage))


class ScriptedProvider:
    """Offline deterministic provider for demos and tests.

    With ``replies`` it plays back canned texts (or ProviderResponse objects)
    in order and fails once exhausted; with ``script`` it delegates; by
    default it synthesizes a well-formed reply from the prompt itself.
    Calls are recorded either way.
    """

    def __init__(
        self,
        replies: list | None = None,
        script: Callable[[ProviderRequest], str] | None = None,
    ):
        self._replies = list(replies) if replies is not None else None
        self._script = script
        self.calls: list[ProviderRequest] = []

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        self.calls.append(request)
        if self._replies is not None:
            if not self._replies:
                raise ProviderUnavailable("scripted provider exhausted")
            item = self._replies.pop(0)
            if isinstance(item, ProviderResponse):
                return item
            return ProviderResponse(content=str(item))
        if self._script is not None:
            return ProviderResponse(content=self._script(request))
        return ProviderResponse(content=_synthesize_reply(request))


def _prompt_field(user_text: str, name: str) -> str:
    prefix = f"{name}: "
    for line in user_text.splitlines():
        if line.startswith(prefix):
            return line[len(prefix):]
    return ""


def _synthesize_reply(request: ProviderRequest) -> str:
    user_text = next(
        (m["content"] for m in request.messages if m.get("role") == "user"), ""
    )
    title = _prompt_field(user_text, "title") or "unknown activity"
    agent = _prompt_field(user_text, "agent") or "the host"
    priority = _prompt_field(user_text, "priority") or "?"
    rule = _prompt_field(user_text, "rule") or "?"
    bare = "STATIC CONTEXT\n(none)" in user_text and "DYNAMIC CONTEXT\n(none)" in user_text
    context_note = (
        "No related knowledge was found for this alert."
        if bare
        else "Related knowledge entries were found and considered."
    )
    return "\n".join(
        [
            SUMMARY_MARKER,
            f"Priority {priority} alert on {agent}: {title}.",
            "",
            ACTIONS_MARKER,
            f"- Review the raw log for rule {rule} on {agent}.",
            f"$ grep -i '{rule}' /var/ossec/logs/alerts/alerts.log",
            "- Check whether the same source appears in earlier alerts.",
            "- Confirm the affected service is in its expected state.",
            "",
            REASONING_MARKER,
            f"The alert matched rule {rule} at priority {priority}. {context_note} "
            "Treat it as suspicious until the recommended checks come back clean.",
        ]
    )


def generate_card(
    provider: ChatProvider,
    tmpl: PromptTemplate,
    alert: Alert,
    bundle: ContextBundle,
    *,
    model: str = "",
    temperature: float = 0.0,
    max_prompt_chars: int = DEFAULT_MAX_PROMPT_CHARS,
) -> SuggestionCard:
    """End-to-end: assemble the prompt, call the provider, parse the reply.

    Transport failures surface as ProviderUnavailable and refusals as
    ProviderRefusal; a reply that merely lacks the markers still becomes a
    (degraded) card.
    """
    request, digest = _assemble(tmpl, alert, bundle, model, temperature, max_prompt_chars)
    started = time.perf_counter()
    response = provider.complete(request)
    latency_ms = (time.perf_counter() - started) * 1000.0
    if response.finish_state not in _SUCCESS_FINISHES:
        raise ProviderRefusal(f"finish state {response.finish_state!r}")
    meta = {"model": model, "latency_ms": round(latency_ms, 3)}
    if response.usage:
        meta["usage"] = dict(response.usage)
    return parse_response(alert.id, response.content, digest, meta)
