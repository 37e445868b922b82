"""Chat backends: live HTTP, file replay, and gold-oracle test double.

The wire contract is a POST of ``{model, messages, temperature, max_tokens}``
returning ``{"content": str}`` (``length_penalty`` is added to the body only
when set). Requests additionally carry a local ``metadata`` mapping - doc_id
and a channel such as ``agent:3`` or ``reflection:triggers`` - which the HTTP
backend ignores but the replay and oracle backends use for routing. All
backends are safe to call from multiple threads.
"""

from __future__ import annotations

import json
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

from .errors import BackendError, ConfigurationError
from .fencing import (
    render_argument_verdicts,
    render_classification_map,
    render_events_answer,
)
from .model import Document

__all__ = [
    "ChatRequest",
    "ChatBackend",
    "HttpChatBackend",
    "ReplayBackend",
    "OracleBackend",
    "make_backend",
]

_ROLES = frozenset({"system", "user", "assistant"})

CHANNEL_KEY = "channel"
DOC_KEY = "doc_id"


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion request."""

    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_output_tokens: int = 1024
    length_penalty: float | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not any(role == "user" for role, _ in self.messages):
            raise ValueError("a chat request needs at least one user message")
        for role, _ in self.messages:
            if role not in _ROLES:
                raise ValueError(f"unknown message role {role!r}")

    @classmethod
    def user(cls, prompt: str, **kwargs) -> "ChatRequest":
        return cls(messages=(("user", prompt),), **kwargs)


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str:
        """Return the assistant reply text for one request."""
        ...


class HttpChatBackend:
    """Talks to a chat-completion HTTP endpoint.

    Credentials come from the environment (default variable REVENT_API_KEY)
    and are sent as a bearer token when present. Transport failures are
    retried with exponential backoff before raising BackendError.
    """

    def __init__(
        self,
        url: str,
        model: str = "default",
        api_key_env: str = "REVENT_API_KEY",
        timeout: float = 120.0,
        max_attempts: int = 3,
        backoff: float = 0.5,
    ):
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff

    def complete(self, request: ChatRequest) -> str:
        body: dict = {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.length_penalty is not None:
            body["length_penalty"] = request.length_penalty
        data = json.dumps(body).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(self.url, data=data, headers=headers)
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    reply = json.loads(resp.read().decode("utf-8"))
                return str(reply["content"])
            except (urllib.error.URLError, OSError, json.JSONDecodeError, KeyError) as exc:
                last_error = exc
        raise BackendError(
            f"chat endpoint {self.url} failed after {self.max_attempts} attempts: {last_error}"
        )


class ReplayBackend:
    """Replays scripted replies from a JSON fixture.

    The fixture maps doc_id -> channel -> reply text, where the channel is
    the request metadata's routing string (``agent:1``,
    ``reflection:triggers``, ``reflection:arguments:<trigger>``). Missing
    entries raise BackendError so a fixture gap never passes silently.
    """

    def __init__(self, replies: Mapping[str, Mapping[str, str]]):
        self._replies = {doc: dict(chans) for doc, chans in replies.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, request: ChatRequest) -> str:
        doc_id = request.metadata.get(DOC_KEY)
        channel = request.metadata.get(CHANNEL_KEY)
        try:
            return self._replies[doc_id][channel]
        except KeyError:
            raise BackendError(
                f"no scripted reply for doc_id={doc_id!r} channel={channel!r}"
            )


class OracleBackend:
    """Answers every request from gold annotations (test double).

    Agent channels get the document's gold events; reflection channels get
    verdicts computed by gold lookup (a candidate trigger phrase is a
    Trigger iff some gold trigger has that surface; an argument is correct
    iff its (text, role) belongs to a gold event with the queried trigger
    surface and type). Upper-bounds reflection quality so aggregation can be
    tested in isolation.
    """

    def __init__(self, corpus: list[Document]):
        self._docs = {doc.doc_id: doc for doc in corpus}

    def _gold(self, doc_id: str | None):
        doc = self._docs.get(doc_id or "")
        if doc is None or doc.gold_events is None:
            raise BackendError(f"oracle backend has no gold events for doc {doc_id!r}")
        return doc.gold_events

    def complete(self, request: ChatRequest) -> str:
        doc_id = request.metadata.get(DOC_KEY)
        channel = request.metadata.get(CHANNEL_KEY, "")
        gold = self._gold(doc_id)
        if channel.startswith("agent:"):
            return render_events_answer(gold)
        if channel == "reflection:triggers":
            candidates = json.loads(request.metadata.get("candidates", "[]"))
            surfaces = {e.trigger.text for e in gold}
            return render_classification_map(
                {c: "Trigger" if c in surfaces else "Non-Trigger" for c in candidates}
            )
        if channel.startswith("reflection:arguments"):
            candidates = json.loads(request.metadata.get("candidates", "[]"))
            trig_text = request.metadata.get("trigger_text")
            trig_type = request.metadata.get("trigger_type")
            valid: set[tuple[str, str]] = set()
            for event in gold:
                if event.trigger.text == trig_text and event.event_type == trig_type:
                    valid.update((a.span.text, a.role) for a in event.arguments)
            return render_argument_verdicts(
                [(text, role, (text, role) in valid) for text, role in candidates]
            )
        raise BackendError(f"oracle backend cannot answer channel {channel!r}")


def make_backend(descriptor: str, corpus: list[Document] | None = None) -> ChatBackend:
    """Build a backend from a CLI descriptor: url | replay:PATH | oracle."""
    if descriptor.startswith(("http://", "https://")):
        return HttpChatBackend(descriptor)
    if descriptor.startswith("replay:"):
        return ReplayBackend.from_file(descriptor.split(":", 1)[1])
    if descriptor == "oracle":
        if corpus is None:
            raise ConfigurationError("oracle backend needs a corpus with gold events")
        return OracleBackend(corpus)
    raise ConfigurationError(
        f"unrecognized backend descriptor {descriptor!r} "
        "(expected a http(s) URL, replay:PATH, or oracle)"
    )
