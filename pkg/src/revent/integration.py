"""Final assembly of the prediction set with provenance preserved.

Events arrive from four paths - consensus, high-confidence tagger-only,
high-confidence ensemble-only, and reflection - and are merged under their
trigger identifier (start, end, event_type). A trigger's arguments may mix
provenances; each argument keeps both its provenance and the identifier of
the trigger it reattaches to. Output is ordered by trigger position.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import IntegrationError
from .model import ArgumentMention, EventKey, EventMention, Span, TriggerId, canonical_key

__all__ = ["Provenance", "ProvenancedEvent", "finalize_events"]


class Provenance(Enum):
    AGREED = "agreed"
    HIGH_CONF_TAGGER = "high_conf_tagger"
    HIGH_CONF_SMOA = "high_conf_smoa"
    REFLECTED = "reflected"


@dataclass(frozen=True)
class ProvenancedEvent:
    """An event plus the path each of its pieces took through the pipeline.

    ``argument_provenances`` is aligned index-for-index with
    ``event.arguments``; every argument implicitly carries this event's
    trigger identifier for reattachment.
    """

    event: EventMention
    trigger_provenance: Provenance
    argument_provenances: tuple[Provenance, ...] = ()

    def __post_init__(self):
        if len(self.argument_provenances) != len(self.event.arguments):
            raise IntegrationError(
                f"{len(self.argument_provenances)} argument provenances for "
                f"{len(self.event.arguments)} arguments"
            )

    @classmethod
    def build(
        cls,
        trigger: Span,
        event_type: str,
        trigger_provenance: Provenance,
        arguments: list[tuple[ArgumentMention, Provenance]] = (),
    ) -> "ProvenancedEvent":
        """Construct from unordered (argument, provenance) pairs."""
        unique: dict[tuple, tuple[ArgumentMention, Provenance]] = {}
        for arg, prov in arguments:
            unique.setdefault(arg.key, (arg, prov))
        ordered = sorted(unique.values(), key=lambda pair: pair[0].key)
        return cls(
            event=EventMention(trigger, event_type, tuple(a for a, _ in ordered)),
            trigger_provenance=trigger_provenance,
            argument_provenances=tuple(p for _, p in ordered),
        )

    @property
    def trigger_id(self) -> TriggerId:
        return (self.event.trigger.start, self.event.trigger.end, self.event.event_type)

    def argument_pairs(self) -> list[tuple[ArgumentMention, Provenance]]:
        return list(zip(self.event.arguments, self.argument_provenances))

    def to_record(self) -> dict:
        """JSON-serializable record mirroring the corpus event schema."""
        trig = self.event.trigger
        return {
            "trigger": {"text": trig.text, "start": trig.start, "end": trig.end},
            "type": self.event.event_type,
            "trigger_provenance": self.trigger_provenance.value,
            "arguments": [
                {
                    "text": arg.span.text,
                    "start": arg.span.start,
                    "end": arg.span.end,
                    "role": arg.role,
                    "provenance": prov.value,
                    "trigger_ref": list(self.trigger_id),
                }
                for arg, prov in self.argument_pairs()
            ],
        }


def finalize_events(
    consensus: list[ProvenancedEvent],
    retained_tagger: list[ProvenancedEvent],
    retained_smoa: list[ProvenancedEvent],
    reflected: list[ProvenancedEvent],
) -> list[ProvenancedEvent]:
    """Union the four prediction paths into the final, position-sorted set.

    Inputs must be pairwise disjoint on whole-event identity (a collision
    indicates an upstream partition bug). Events sharing a trigger
    identifier are merged into one final event whose arguments are
    reattached under that trigger, first-path provenance winning on
    duplicate arguments.
    """
    labelled = [
        ("consensus", consensus),
        ("retained_tagger", retained_tagger),
        ("retained_smoa", retained_smoa),
        ("reflected", reflected),
    ]
    seen_keys: dict[EventKey, str] = {}
    for name, events in labelled:
        for pe in events:
            key = canonical_key(pe.event)
            if key in seen_keys:
                raise IntegrationError(
                    f"event key {key} appears in both {seen_keys[key]!r} and {name!r}"
                )
            seen_keys[key] = name

    merged: dict[TriggerId, dict] = {}
    for _, events in labelled:
        for pe in events:
            slot = merged.setdefault(
                pe.trigger_id,
                {"trigger": pe.event.trigger, "provenance": pe.trigger_provenance, "args": []},
            )
            slot["args"].extend(pe.argument_pairs())

    final = [
        ProvenancedEvent.build(
            trigger=slot["trigger"],
            event_type=tid[2],
            trigger_provenance=slot["provenance"],
            arguments=slot["args"],
        )
        for tid, slot in merged.items()
    ]
    final.sort(key=lambda pe: (pe.event.trigger.start, pe.event.trigger.end, pe.event.event_type))
    return final
