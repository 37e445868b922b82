"""Grid-search calibration of the confidence thresholds on a dev split.

Confidence distributions are computed separately for correct and incorrect
dev predictions; their quartiles guide the search grid (widened a step each
side, always including 0.0 and a just-above-one sentinel so "keep all" and
"never keep directly" stay reachable). Every triple on the grid is
evaluated by running the full downstream pipeline - with reflection
replaced by a stand-in, keep-all by default - and the argmax-F1 triple
wins; ties break to the smallest theta_smoa_lo, then theta_s, then
theta_smoa_hi.

Trigger thresholds are tuned first against trigger-classification F1; the
argument triple is then tuned against argument-classification F1 with the
trigger triple held fixed.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .confidence import ThresholdSet, ThresholdTriple
from .ensemble import VoteLedger, cleanup_predictions
from .errors import ConfigurationError
from .ingest import TaggerPrediction
from .metrics import gold_from_corpus, score_predictions
from .model import Document, EventMention, trigger_id
from .pipeline import Reflector, extract_document, standin_reflector

__all__ = [
    "DevPredictions",
    "derive_search_values",
    "collect_confidence_samples",
    "evaluate_threshold_set",
    "tune_thresholds",
]

# With this triple no argument survives filtering; used while tuning
# triggers, where the argument stage cannot affect the objective.
_DROP_ALL_ARGS = ThresholdTriple(theta_s=2.0, theta_smoa_hi=2.0, theta_smoa_lo=2.0)


@dataclass
class DevPredictions:
    """Pre-computed dev-split predictions from both sources."""

    tagger: dict[str, list[TaggerPrediction]]
    smoa: dict[str, tuple[list[EventMention], VoteLedger]]
    n_agents: int


def _quartiles(data: list[float]) -> tuple[float, float]:
    if len(data) >= 2:
        q = statistics.quantiles(data, n=4, method="inclusive")
        return q[0], q[2]
    return data[0], data[0]


def derive_search_values(
    correct: list[float], incorrect: list[float], step: float
) -> list[float]:
    """Grid values spanning the quartile range of the two distributions.

    The grid runs from one step below the lowest first quartile to one step
    above the highest third quartile (clamped at 0), and always includes
    0.0 and the 1.0 + step sentinel.
    """
    if step <= 0:
        raise ConfigurationError("grid step must be positive")
    pools = [d for d in (correct, incorrect) if d]
    if not pools:
        raise ConfigurationError("no dev predictions to derive a search range from")
    quarts = [_quartiles(d) for d in pools]
    lo_raw = min(q[0] for q in quarts)
    hi_raw = max(q[1] for q in quarts)
    lo = max(0.0, (math.floor(lo_raw / step + 1e-9) - 1) * step)
    hi = min((math.ceil(hi_raw / step - 1e-9) + 1) * step, 1.0 + step)
    values = {round(0.0, 10), round(1.0 + step, 10)}
    count = int(round((hi - lo) / step))
    for i in range(count + 1):
        values.add(round(lo + i * step, 10))
    return sorted(values)


def collect_confidence_samples(
    dev: list[Document], predictions: DevPredictions, level: str
) -> tuple[tuple[list[float], list[float]], tuple[list[float], list[float]]]:
    """((tagger correct, tagger incorrect), (smoa correct, smoa incorrect))
    confidence samples at the requested level ("trigger" or "argument")."""
    if level not in ("trigger", "argument"):
        raise ConfigurationError(f"unknown level {level!r}")
    tagger_c: list[float] = []
    tagger_i: list[float] = []
    smoa_c: list[float] = []
    smoa_i: list[float] = []
    n = predictions.n_agents

    for doc in dev:
        if doc.gold_events is None:
            raise ConfigurationError(f"dev doc {doc.doc_id!r} has no gold events")
        gold_triggers = {trigger_id(e) for e in doc.gold_events}
        gold_args = {
            (trigger_id(e), a.key) for e in doc.gold_events for a in e.arguments
        }

        for pred in predictions.tagger.get(doc.doc_id, []):
            tid = trigger_id(pred.event)
            if level == "trigger":
                (tagger_c if tid in gold_triggers else tagger_i).append(
                    pred.trigger_confidence
                )
            else:
                for arg, conf in zip(pred.event.arguments, pred.argument_confidences):
                    (tagger_c if (tid, arg.key) in gold_args else tagger_i).append(conf)

        events, ledger = predictions.smoa.get(doc.doc_id, ([], VoteLedger()))
        seen_triggers: set = set()
        seen_args: set = set()
        for event in cleanup_predictions(events, doc):
            tid = trigger_id(event)
            if level == "trigger":
                if tid in seen_triggers:
                    continue
                seen_triggers.add(tid)
                conf = len(ledger.trigger_votes(tid)) / n
                (smoa_c if tid in gold_triggers else smoa_i).append(conf)
            else:
                for arg in event.arguments:
                    if (tid, arg.key) in seen_args:
                        continue
                    seen_args.add((tid, arg.key))
                    conf = len(ledger.argument_votes(tid, arg.key)) / n
                    (smoa_c if (tid, arg.key) in gold_args else smoa_i).append(conf)

    return (tagger_c, tagger_i), (smoa_c, smoa_i)


def evaluate_threshold_set(
    dev: list[Document],
    predictions: DevPredictions,
    thresholds: ThresholdSet,
    overlap_threshold: float,
    reflector: Reflector,
):
    """Metrics of the full downstream pipeline at one threshold setting."""
    preds = {}
    for doc in dev:
        events, ledger = predictions.smoa.get(doc.doc_id, ([], VoteLedger()))
        result = extract_document(
            doc,
            predictions.tagger.get(doc.doc_id, []),
            events,
            ledger,
            predictions.n_agents,
            thresholds,
            overlap_threshold,
            reflector,
        )
        preds[doc.doc_id] = result.final_events
    return score_predictions(preds, gold_from_corpus(dev))


def _tune_level(
    dev: list[Document],
    predictions: DevPredictions,
    level: str,
    s_values: list[float],
    m_values: list[float],
    overlap_threshold: float,
    reflector: Reflector,
    fixed_trigger: ThresholdTriple | None,
) -> ThresholdTriple:
    best: tuple[float, ThresholdTriple] | None = None
    for lo in m_values:
        for theta_s in s_values:
            for hi in m_values:
                if lo > hi:
                    continue
                triple = ThresholdTriple(theta_s=theta_s, theta_smoa_hi=hi, theta_smoa_lo=lo)
                if level == "trigger":
                    thresholds = ThresholdSet(trigger=triple, argument=_DROP_ALL_ARGS)
                else:
                    assert fixed_trigger is not None
                    thresholds = ThresholdSet(trigger=fixed_trigger, argument=triple)
                metrics = evaluate_threshold_set(
                    dev, predictions, thresholds, overlap_threshold, reflector
                )
                f1 = (metrics.trigger_cls if level == "trigger" else metrics.argument_cls).f1
                # Ascending (lo, theta_s, hi) iteration + strict improvement
                # keeps the lexicographically smallest argmax.
                if best is None or f1 > best[0]:
                    best = (f1, triple)
    assert best is not None
    return best[1]


def tune_thresholds(
    dev: list[Document],
    predictions: DevPredictions,
    grid_step: float = 0.05,
    overlap_threshold: float = 0.5,
    reflection_standin: str = "keep-all",
) -> ThresholdSet:
    """Argmax-F1 threshold triples for triggers and arguments.

    Equals exhaustive brute-force search over the derived grids; see the
    module docstring for the search-range and tie-break rules.
    """
    if not dev:
        raise ConfigurationError("threshold tuning needs a non-empty dev set")
    reflector = standin_reflector(reflection_standin)

    def values(correct, incorrect):
        if not correct and not incorrect:
            # This source made no dev predictions, so its cutoff is inert;
            # search just the two extremes.
            return [0.0, round(1.0 + grid_step, 10)]
        return derive_search_values(correct, incorrect, grid_step)

    (tc, ti), (mc, mi) = collect_confidence_samples(dev, predictions, "trigger")
    trigger_triple = _tune_level(
        dev, predictions, "trigger",
        values(tc, ti), values(mc, mi),
        overlap_threshold, reflector, None,
    )

    (tc, ti), (mc, mi) = collect_confidence_samples(dev, predictions, "argument")
    argument_triple = _tune_level(
        dev, predictions, "argument",
        values(tc, ti), values(mc, mi),
        overlap_threshold, reflector, trigger_triple,
    )
    return ThresholdSet(trigger=trigger_triple, argument=argument_triple)
