"""Domain types and span algebra for event mentions.

Offsets are character-based and half-open: a span covers text[start:end).
All types are immutable after construction; the operations here are pure
functions, so values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SpanValidationError

__all__ = [
    "Span",
    "Document",
    "ArgumentMention",
    "EventMention",
    "EventKey",
    "TriggerId",
    "span_overlap",
    "locate_span",
    "canonical_key",
    "trigger_id",
]

# (start, end, event_type) - identifies a trigger independent of its arguments.
TriggerId = tuple[int, int, str]

# (start, end, role) - canonical identity of one argument mention.
ArgumentKey = tuple[int, int, str]


@dataclass(frozen=True, slots=True)
class Span:
    """A contiguous character range of a source text with its surface string."""

    text: str
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span range [{self.start}, {self.end})")
        if self.end - self.start != len(self.text):
            raise ValueError(
                f"span length {self.end - self.start} does not match "
                f"surface string of length {len(self.text)} ({self.text!r})"
            )

    @property
    def range(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True, slots=True)
class ArgumentMention:
    """An argument span labelled with its semantic role."""

    span: Span
    role: str

    def __post_init__(self):
        if not self.role:
            raise ValueError("argument role must be non-empty")

    @property
    def key(self) -> ArgumentKey:
        return (self.span.start, self.span.end, self.role)


@dataclass(frozen=True)
class EventMention:
    """A trigger span, its event type, and the associated arguments.

    Arguments are normalized at construction: sorted by (start, end, role)
    and deduplicated on that key, so equal argument sets compare equal
    regardless of input order.
    """

    trigger: Span
    event_type: str
    arguments: tuple[ArgumentMention, ...] = ()

    def __post_init__(self):
        seen: set[ArgumentKey] = set()
        normalized = []
        for arg in sorted(self.arguments, key=lambda a: a.key):
            if arg.key in seen:
                continue
            seen.add(arg.key)
            normalized.append(arg)
        object.__setattr__(self, "arguments", tuple(normalized))

    def with_trigger(self, trig: Span) -> "EventMention":
        return EventMention(trig, self.event_type, self.arguments)

    def with_arguments(self, args) -> "EventMention":
        return EventMention(self.trigger, self.event_type, tuple(args))


@dataclass(frozen=True, slots=True)
class EventKey:
    """Canonical identity of an event prediction.

    Two EventMentions with equal keys are the same prediction: same trigger
    span, same event type, same argument set (span + role, order-free).
    """

    trigger_start: int
    trigger_end: int
    event_type: str
    argument_keys: tuple[ArgumentKey, ...]

    @property
    def trigger_id(self) -> TriggerId:
        return (self.trigger_start, self.trigger_end, self.event_type)


@dataclass(frozen=True)
class Document:
    """A source passage with an identifier and optional gold annotations."""

    doc_id: str
    text: str
    gold_events: tuple[EventMention, ...] | None = None

    def __post_init__(self):
        if self.gold_events is not None:
            object.__setattr__(self, "gold_events", tuple(self.gold_events))
            for event in self.gold_events:
                self.check_containment(event.trigger)
                for arg in event.arguments:
                    self.check_containment(arg.span)

    def check_containment(self, span: Span) -> None:
        """Raise unless text[start:end) equals the span's surface string."""
        if span.end > len(self.text) or self.text[span.start:span.end] != span.text:
            raise SpanValidationError(
                f"doc {self.doc_id!r}: span [{span.start}, {span.end}) does not "
                f"slice to {span.text!r}"
            )

    def contains(self, span: Span) -> bool:
        return (
            span.end <= len(self.text)
            and self.text[span.start:span.end] == span.text
        )


def span_overlap(a: Span, b: Span) -> float:
    """Jaccard overlap of two character ranges: |intersection| / |union|.

    1.0 iff the ranges are identical, 0.0 iff they are disjoint (half-open
    ranges that merely touch are disjoint).
    """
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    union = max(a.end, b.end) - min(a.start, b.start)
    return inter / union


def locate_span(doc: Document, surface: str, search_from: int = 0) -> Span | None:
    """First occurrence of ``surface`` at or after ``search_from``, as a Span.

    Returns None when the string does not occur (absence is a value, not an
    error).
    """
    if not surface:
        return None
    idx = doc.text.find(surface, search_from)
    if idx < 0:
        return None
    return Span(surface, idx, idx + len(surface))


def canonical_key(event: EventMention) -> EventKey:
    """Canonical, argument-order-free key for an event prediction."""
    return EventKey(
        trigger_start=event.trigger.start,
        trigger_end=event.trigger.end,
        event_type=event.event_type,
        argument_keys=tuple(arg.key for arg in event.arguments),
    )


def trigger_id(event: EventMention) -> TriggerId:
    """Trigger-level identity (start, end, event_type) of an event."""
    return (event.trigger.start, event.trigger.end, event.event_type)
