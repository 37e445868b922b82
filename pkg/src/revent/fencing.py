"""Fenced-block extraction and the structured answer codec.

Model replies and instruction answers wrap their payload in triple
backticks, with a single top-level key: ``Key = <json value>``. This module
owns that little grammar so prompt rendering, answer generation, and reply
parsing stay in exact round-trip agreement.
"""

from __future__ import annotations

import ast
import json
import re

from .errors import ReplyParseError

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]+\n)?(.*?)```", re.DOTALL)


def extract_fenced_block(raw: str) -> str:
    """Return the body of the first triple-backtick fence in ``raw``.

    Surrounding prose is ignored. Raises ReplyParseError (carrying the raw
    text) when no fence is present.
    """
    match = _FENCE_RE.search(raw)
    if match is None:
        raise ReplyParseError("no triple-backtick fence found in reply", raw=raw)
    return match.group(1).strip()


def render_fence(body: str) -> str:
    return f"```\n{body}\n```"


def render_answer(key: str, value) -> str:
    """Serialize ``Key = <value>`` inside a fence, value as compact JSON."""
    return render_fence(f"{key} = {json.dumps(value, ensure_ascii=False)}")


def parse_answer(raw: str, expected_key: str | None = None) -> tuple[str, object]:
    """Parse a fenced ``Key = <value>`` answer back to (key, value).

    The value is decoded as JSON first; Python literal syntax (single
    quotes, True/False) is accepted as a fallback so near-miss model output
    still parses. Raises ReplyParseError on a missing fence, a malformed
    body, or a key mismatch.
    """
    body = extract_fenced_block(raw)
    eq = body.find("=")
    if eq < 0:
        raise ReplyParseError(f"fenced body has no 'Key =' assignment: {body!r}", raw=raw)
    key = body[:eq].strip()
    if not key or not key.isidentifier():
        raise ReplyParseError(f"malformed answer key {key!r}", raw=raw)
    if expected_key is not None and key != expected_key:
        raise ReplyParseError(
            f"expected top-level key {expected_key!r}, got {key!r}", raw=raw
        )
    payload = body[eq + 1:].strip()
    try:
        value = json.loads(payload)
    except json.JSONDecodeError:
        try:
            value = ast.literal_eval(payload)
        except (ValueError, SyntaxError):
            raise ReplyParseError(f"unparseable answer payload: {payload!r}", raw=raw)
    return key, value


def events_to_payload(events) -> list[dict]:
    """EventMentions -> the offset-free answer payload agents emit."""
    return [
        {
            "trigger": e.trigger.text,
            "type": e.event_type,
            "arguments": [{"text": a.span.text, "role": a.role} for a in e.arguments],
        }
        for e in events
    ]


def render_events_answer(events) -> str:
    return render_answer("Events", events_to_payload(events))


def render_classification_map(verdicts: dict[str, str]) -> str:
    """Fenced ClassificationMap answer used for trigger verification."""
    return render_answer("ClassificationMap", verdicts)


def render_argument_verdicts(items) -> str:
    """Fenced argument-verification answer: (text, role, is_correct) triples."""
    payload = [
        {"text": text, "role": role, "is_correct": bool(ok)} for text, role, ok in items
    ]
    return render_fence(json.dumps(payload, ensure_ascii=False))
