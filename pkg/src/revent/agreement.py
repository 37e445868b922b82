"""Consensus detection between ensemble and tagger predictions.

Triggers from the two sources agree when their event types match and their
character spans overlap at or above a threshold (Jaccard); matching is
greedy by descending overlap and strictly one-to-one. For a matched trigger
pair, arguments agree when roles match and spans overlap; the tagger's span
is always the retained one, since boundary precision is its strength. At
threshold 1.0 with identical argument sets this degenerates to exact
whole-event intersection.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError
from .model import ArgumentMention, EventMention, canonical_key, span_overlap

__all__ = [
    "MatchedPair",
    "MatchReport",
    "MatchedArgumentPair",
    "ArgumentMatchReport",
    "match_triggers",
    "match_arguments",
]


@dataclass(frozen=True)
class MatchedPair:
    """A consensus trigger: one ensemble event aligned to one tagger event.

    ``retained`` is the event identity carried forward - the tagger's span
    and the shared event type.
    """

    smoa: EventMention
    tagger: EventMention
    overlap: float

    @property
    def retained(self) -> EventMention:
        return EventMention(self.tagger.trigger, self.tagger.event_type)


@dataclass(frozen=True)
class MatchReport:
    consensus: tuple[MatchedPair, ...]
    smoa_only: tuple[EventMention, ...]
    tagger_only: tuple[EventMention, ...]


@dataclass(frozen=True)
class MatchedArgumentPair:
    smoa: ArgumentMention
    tagger: ArgumentMention
    overlap: float

    @property
    def retained(self) -> ArgumentMention:
        return self.tagger


@dataclass(frozen=True)
class ArgumentMatchReport:
    consensus: tuple[MatchedArgumentPair, ...]
    smoa_only: tuple[ArgumentMention, ...]
    tagger_only: tuple[ArgumentMention, ...]


def _check_threshold(overlap_threshold: float) -> None:
    if not 0.0 < overlap_threshold <= 1.0:
        raise ContractError(f"overlap threshold must be in (0, 1], got {overlap_threshold}")


def match_triggers(
    smoa: list[EventMention],
    tagger: list[EventMention],
    overlap_threshold: float = 0.5,
) -> MatchReport:
    """Greedy maximum-overlap one-to-one matching of trigger predictions.

    Candidate pairs need an equal event type and span overlap at or above
    the threshold; cross-type pairs are never consensus regardless of
    overlap. Ties on overlap break to the earliest tagger start, then the
    earliest ensemble start. Every input event lands in exactly one of the
    report's three lists.
    """
    _check_threshold(overlap_threshold)
    for name, events in (("smoa", smoa), ("tagger", tagger)):
        keys = [canonical_key(e) for e in events]
        if len(set(keys)) != len(keys):
            raise ContractError(f"{name} events are not deduplicated")

    candidates = []
    for si, s in enumerate(smoa):
        for ti, t in enumerate(tagger):
            if s.event_type != t.event_type:
                continue
            ov = span_overlap(s.trigger, t.trigger)
            if ov >= overlap_threshold:
                candidates.append((ov, t, s, ti, si))
    candidates.sort(
        key=lambda c: (-c[0], c[1].trigger.start, c[1].trigger.end,
                       c[2].trigger.start, c[2].trigger.end, c[3], c[4])
    )

    matched_s: set[int] = set()
    matched_t: set[int] = set()
    pairs: list[MatchedPair] = []
    for ov, t, s, ti, si in candidates:
        if si in matched_s or ti in matched_t:
            continue
        matched_s.add(si)
        matched_t.add(ti)
        pairs.append(MatchedPair(smoa=s, tagger=t, overlap=ov))

    return MatchReport(
        consensus=tuple(pairs),
        smoa_only=tuple(s for i, s in enumerate(smoa) if i not in matched_s),
        tagger_only=tuple(t for i, t in enumerate(tagger) if i not in matched_t),
    )


def match_arguments(
    pair: MatchedPair, overlap_threshold: float = 0.5
) -> ArgumentMatchReport:
    """Align the arguments of a matched trigger pair, one-to-one.

    Arguments agree when roles are equal and spans overlap at or above the
    threshold; agreement is partial - a trigger may have some arguments in
    consensus and others not.
    """
    _check_threshold(overlap_threshold)
    s_args, t_args = pair.smoa.arguments, pair.tagger.arguments

    candidates = []
    for si, s in enumerate(s_args):
        for ti, t in enumerate(t_args):
            if s.role != t.role:
                continue
            ov = span_overlap(s.span, t.span)
            if ov >= overlap_threshold:
                candidates.append((ov, t, s, ti, si))
    candidates.sort(
        key=lambda c: (-c[0], c[1].span.start, c[1].span.end,
                       c[2].span.start, c[2].span.end, c[3], c[4])
    )

    matched_s: set[int] = set()
    matched_t: set[int] = set()
    pairs: list[MatchedArgumentPair] = []
    for ov, t, s, ti, si in candidates:
        if si in matched_s or ti in matched_t:
            continue
        matched_s.add(si)
        matched_t.add(ti)
        pairs.append(MatchedArgumentPair(smoa=s, tagger=t, overlap=ov))

    return ArgumentMatchReport(
        consensus=tuple(pairs),
        smoa_only=tuple(s for i, s in enumerate(s_args) if i not in matched_s),
        tagger_only=tuple(t for i, t in enumerate(t_args) if i not in matched_t),
    )
