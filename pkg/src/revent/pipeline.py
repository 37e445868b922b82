"""End-to-end per-document pipeline.

For one document: match ensemble predictions against tagger predictions at
the trigger level, filter single-source trigger disagreements by
confidence, do the same per argument under every surviving trigger, send
the intermediate-confidence leftovers to reflection, and assemble the final
provenance-tagged event set.

The reflection step is pluggable: the live reflector wraps a chat backend,
while keep-all / drop-all / gold-oracle stand-ins support tuning and
simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .agreement import MatchReport, match_arguments, match_triggers
from .backends import ChatBackend
from .confidence import (
    Partition,
    ScoredArgument,
    ScoredEvent,
    Source,
    ThresholdSet,
    filter_disagreements,
)
from .ensemble import VoteLedger, cleanup_predictions
from .errors import ConfigurationError
from .ingest import TaggerPrediction
from .integration import Provenance, ProvenancedEvent, finalize_events
from .model import (
    ArgumentMention,
    Document,
    EventMention,
    Span,
    TriggerId,
    canonical_key,
    trigger_id,
)
from .reflection import (
    AuditLog,
    ReflectionConfig,
    ReflectionItem,
    ReflectionResult,
    reflect,
)

__all__ = [
    "Reflector",
    "keep_all_reflector",
    "drop_all_reflector",
    "oracle_reflector",
    "backend_reflector",
    "DocumentResult",
    "extract_document",
]

# A reflector resolves ambiguous items for one document.
Reflector = Callable[[Document, list[ReflectionItem]], list[ReflectionResult]]


def keep_all_reflector(doc: Document, items: list[ReflectionItem]) -> list[ReflectionResult]:
    """Stand-in that confirms every ambiguous trigger and argument."""
    return [ReflectionResult(item, True, item.pending_arguments) for item in items]


def drop_all_reflector(doc: Document, items: list[ReflectionItem]) -> list[ReflectionResult]:
    """Stand-in that rejects every ambiguous trigger and argument."""
    return [
        ReflectionResult(item, not item.trigger_ambiguous, ()) for item in items
    ]


def oracle_reflector(doc: Document, items: list[ReflectionItem]) -> list[ReflectionResult]:
    """Stand-in that answers from gold: surface-level trigger and
    (text, role) argument lookup. Upper-bounds reflection quality."""
    gold = doc.gold_events
    if gold is None:
        raise ConfigurationError(f"oracle reflection needs gold events on {doc.doc_id!r}")
    trigger_surfaces = {e.trigger.text for e in gold}
    results = []
    for item in items:
        kept = (not item.trigger_ambiguous) or item.event.trigger.text in trigger_surfaces
        confirmed: tuple[ArgumentMention, ...] = ()
        if kept:
            valid = {
                (a.span.text, a.role)
                for e in gold
                if e.trigger.text == item.event.trigger.text
                and e.event_type == item.event.event_type
                for a in e.arguments
            }
            confirmed = tuple(
                a for a in item.pending_arguments if (a.span.text, a.role) in valid
            )
        results.append(ReflectionResult(item, kept, confirmed))
    return results


def backend_reflector(
    backend: ChatBackend,
    config: ReflectionConfig | None = None,
    audit: AuditLog | None = None,
) -> Reflector:
    """The live reflector: structured prompts against a chat backend."""

    def run(doc: Document, items: list[ReflectionItem]) -> list[ReflectionResult]:
        return list(reflect(items, doc, backend, config, audit).results)

    return run


def standin_reflector(name: str) -> Reflector:
    try:
        return {
            "keep-all": keep_all_reflector,
            "drop-all": drop_all_reflector,
            "oracle": oracle_reflector,
        }[name]
    except KeyError:
        raise ConfigurationError(f"unknown reflection stand-in {name!r}")


@dataclass
class _Candidate:
    """One trigger that may reach the final set, with its argument pools."""

    trigger: Span
    event_type: str
    provenance: Provenance           # provenance if it survives
    bucket: str                      # consensus | retained_tagger | retained_smoa | reflected
    ambiguous: bool                  # needs a trigger verdict
    agreed_args: list[tuple[ArgumentMention, Provenance]] = field(default_factory=list)
    scored_args: list[ScoredArgument] = field(default_factory=list)
    kept_args: list[tuple[ArgumentMention, Provenance]] = field(default_factory=list)
    pending_args: list[ArgumentMention] = field(default_factory=list)
    argument_partition: Partition | None = None

    @property
    def event(self) -> EventMention:
        return EventMention(self.trigger, self.event_type)


@dataclass
class DocumentResult:
    """Everything the pipeline decided for one document."""

    doc_id: str
    smoa_events: list[EventMention]
    trigger_report: MatchReport
    trigger_partition: Partition
    argument_partitions: dict[TriggerId, Partition]
    reflection_results: list[ReflectionResult]
    final: list[ProvenancedEvent]

    @property
    def final_events(self) -> list[EventMention]:
        return [pe.event for pe in self.final]


def _merge_partitions(base: Partition | None, extra: Partition) -> Partition:
    if base is None:
        return extra
    return Partition(
        retained_tagger=base.retained_tagger + extra.retained_tagger,
        retained_smoa=base.retained_smoa + extra.retained_smoa,
        removed=base.removed + extra.removed,
        reflect=base.reflect + extra.reflect,
    )


def _dedupe_tagger(preds: list[TaggerPrediction]) -> list[TaggerPrediction]:
    best: dict = {}
    for pred in preds:
        key = canonical_key(pred.event)
        if key not in best or pred.trigger_confidence > best[key].trigger_confidence:
            best[key] = pred
    return list(best.values())


def extract_document(
    doc: Document,
    tagger_predictions: list[TaggerPrediction],
    smoa_events: list[EventMention],
    ledger: VoteLedger,
    n_agents: int,
    thresholds: ThresholdSet,
    overlap_threshold: float = 0.5,
    reflector: Reflector = keep_all_reflector,
) -> DocumentResult:
    """Run matching, filtering, reflection, and final assembly for one doc.

    ``smoa_events`` is the aggregated (not necessarily cleaned) agent union
    with its vote ledger over ``n_agents`` agents; ``tagger_predictions``
    carry the tagger confidences.
    """
    preds = _dedupe_tagger(tagger_predictions)
    pred_by_key = {canonical_key(p.event): p for p in preds}
    tagger_events = [p.event for p in preds]

    smoa_clean = cleanup_predictions(smoa_events, doc)
    report = match_triggers(smoa_clean, tagger_events, overlap_threshold)

    def smoa_trigger_conf(event: EventMention) -> float:
        return len(ledger.trigger_votes(trigger_id(event))) / n_agents

    def smoa_argument_conf(event: EventMention, arg: ArgumentMention) -> float:
        return len(ledger.argument_votes(trigger_id(event), arg.key)) / n_agents

    candidates: list[_Candidate] = []

    # Consensus triggers: tagger span retained; both argument sides pooled.
    for pair in report.consensus:
        cand = _Candidate(
            trigger=pair.tagger.trigger,
            event_type=pair.tagger.event_type,
            provenance=Provenance.AGREED,
            bucket="consensus",
            ambiguous=False,
        )
        arg_report = match_arguments(pair, overlap_threshold)
        cand.agreed_args = [(m.retained, Provenance.AGREED) for m in arg_report.consensus]
        tagger_pred = pred_by_key[canonical_key(pair.tagger)]
        for arg in arg_report.tagger_only:
            cand.scored_args.append(
                ScoredArgument(arg, Source.TAGGER, tagger_pred.argument_confidence(arg))
            )
        for arg in arg_report.smoa_only:
            cand.scored_args.append(
                ScoredArgument(arg, Source.SMOA, smoa_argument_conf(pair.smoa, arg))
            )
        candidates.append(cand)

    # Single-source triggers: score and filter.
    trigger_scored: list[ScoredEvent] = []
    for event in report.tagger_only:
        trigger_scored.append(
            ScoredEvent(event, Source.TAGGER, pred_by_key[canonical_key(event)].trigger_confidence)
        )
    for event in report.smoa_only:
        trigger_scored.append(ScoredEvent(event, Source.SMOA, smoa_trigger_conf(event)))
    trigger_partition = filter_disagreements(trigger_scored, thresholds.trigger)

    def add_single_source(scored: ScoredEvent, bucket: str, prov: Provenance, ambiguous: bool):
        event = scored.event
        cand = _Candidate(
            trigger=event.trigger,
            event_type=event.event_type,
            provenance=prov,
            bucket=bucket,
            ambiguous=ambiguous,
        )
        if scored.source is Source.TAGGER:
            pred = pred_by_key[canonical_key(event)]
            for arg in event.arguments:
                cand.scored_args.append(
                    ScoredArgument(arg, Source.TAGGER, pred.argument_confidence(arg))
                )
        else:
            for arg in event.arguments:
                cand.scored_args.append(
                    ScoredArgument(arg, Source.SMOA, smoa_argument_conf(event, arg))
                )
        candidates.append(cand)

    for scored in trigger_partition.retained_tagger:
        add_single_source(scored, "retained_tagger", Provenance.HIGH_CONF_TAGGER, False)
    for scored in trigger_partition.retained_smoa:
        add_single_source(scored, "retained_smoa", Provenance.HIGH_CONF_SMOA, False)
    for scored in trigger_partition.reflect:
        add_single_source(scored, "reflected", Provenance.REFLECTED, True)

    # Argument-level filtering under every candidate trigger. Candidates can
    # share a trigger identifier (same trigger proposed with different
    # argument sets), so the reported per-trigger partitions merge.
    argument_partitions: dict[TriggerId, Partition] = {}
    for cand in candidates:
        part = filter_disagreements(cand.scored_args, thresholds.argument)
        cand.argument_partition = part
        tid = (cand.trigger.start, cand.trigger.end, cand.event_type)
        argument_partitions[tid] = _merge_partitions(argument_partitions.get(tid), part)
        for scored in part.retained_tagger:
            cand.kept_args.append((scored.argument, Provenance.HIGH_CONF_TAGGER))
        for scored in part.retained_smoa:
            cand.kept_args.append((scored.argument, Provenance.HIGH_CONF_SMOA))
        for scored in part.reflect:
            cand.pending_args.append(scored.argument)

    # Reflection on ambiguous triggers and pending arguments.
    needs_reflection = [
        cand for cand in candidates if cand.ambiguous or cand.pending_args
    ]
    items = [
        ReflectionItem(
            event=cand.event,
            trigger_ambiguous=cand.ambiguous,
            kept_arguments=tuple(a for a, _ in cand.agreed_args + cand.kept_args),
            pending_arguments=tuple(cand.pending_args),
        )
        for cand in needs_reflection
    ]
    results = reflector(doc, items) if items else []
    if len(results) != len(items):
        raise ConfigurationError(
            f"reflector returned {len(results)} results for {len(items)} items"
        )
    confirmed_by_candidate = dict(zip((id(c) for c in needs_reflection), results))

    # Assemble the four provenance buckets and merge. Distinct input
    # predictions can converge on an identical final event once arguments
    # are filtered (e.g. the same trigger proposed with argument supersets);
    # only the first assembly survives, in bucket-precedence order, so the
    # merge's disjointness contract keeps catching real partition bugs.
    buckets: dict[str, list[ProvenancedEvent]] = {
        "consensus": [], "retained_tagger": [], "retained_smoa": [], "reflected": [],
    }
    assembled: set = set()
    for cand in candidates:
        result = confirmed_by_candidate.get(id(cand))
        if result is not None and not result.trigger_kept:
            continue
        arg_pairs = list(cand.agreed_args) + list(cand.kept_args)
        if result is not None:
            arg_pairs += [(arg, Provenance.REFLECTED) for arg in result.confirmed_arguments]
        built = ProvenancedEvent.build(cand.trigger, cand.event_type, cand.provenance, arg_pairs)
        key = canonical_key(built.event)
        if key in assembled:
            continue
        assembled.add(key)
        buckets[cand.bucket].append(built)

    final = finalize_events(
        buckets["consensus"],
        buckets["retained_tagger"],
        buckets["retained_smoa"],
        buckets["reflected"],
    )
    return DocumentResult(
        doc_id=doc.doc_id,
        smoa_events=smoa_clean,
        trigger_report=report,
        trigger_partition=trigger_partition,
        argument_partitions=argument_partitions,
        reflection_results=list(results),
        final=final,
    )
