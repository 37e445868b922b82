"""Confidence scoring and three-way filtering of disagreement predictions.

Single-source disagreements are scored - tagger events by their softmax
confidence, ensemble events by the fraction of agents voting for them - and
partitioned against a threshold triple:

* tagger events with conf >= theta_s are retained directly, others removed;
* ensemble events with conf >= theta_smoa_hi are retained directly, those
  below theta_smoa_lo are removed, and the intermediate band is forwarded
  to reflection.

Threshold values above 1.0 are legal and mean "never retain directly".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .ensemble import VoteLedger
from .errors import ConfigurationError
from .model import ArgumentMention, EventMention, canonical_key

__all__ = [
    "Source",
    "ScoredEvent",
    "ScoredArgument",
    "ThresholdTriple",
    "ThresholdSet",
    "Partition",
    "score_smoa_confidence",
    "filter_disagreements",
    "filter_disagreements_combined",
    "bundled_thresholds",
    "load_threshold_set",
    "save_threshold_set",
]


class Source(Enum):
    TAGGER = "tagger"
    SMOA = "smoa"


@dataclass(frozen=True)
class ScoredEvent:
    """A disagreement prediction with its provenance and confidence.

    ``confidence`` may be left None for ensemble events, in which case the
    filter computes it from the vote ledger (whole-event votes / n).
    """

    event: EventMention
    source: Source
    confidence: float | None = None


@dataclass(frozen=True)
class ScoredArgument:
    """An argument-level disagreement under some trigger, pre-scored."""

    argument: ArgumentMention
    source: Source
    confidence: float


@dataclass(frozen=True)
class ThresholdTriple:
    """Keep/drop cutoffs for one prediction level (triggers or arguments)."""

    theta_s: float
    theta_smoa_hi: float
    theta_smoa_lo: float

    def __post_init__(self):
        if self.theta_smoa_lo < 0 or self.theta_s < 0:
            raise ConfigurationError("thresholds must be non-negative")
        if self.theta_smoa_lo > self.theta_smoa_hi:
            raise ConfigurationError(
                f"theta_smoa_lo {self.theta_smoa_lo} exceeds theta_smoa_hi {self.theta_smoa_hi}"
            )

    def as_dict(self) -> dict[str, float]:
        return {
            "theta_s": self.theta_s,
            "theta_smoa_hi": self.theta_smoa_hi,
            "theta_smoa_lo": self.theta_smoa_lo,
        }


@dataclass(frozen=True)
class ThresholdSet:
    """One threshold triple for triggers and one for arguments."""

    trigger: ThresholdTriple
    argument: ThresholdTriple

    def as_dict(self) -> dict:
        return {"trigger": self.trigger.as_dict(), "argument": self.argument.as_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdSet":
        return cls(
            trigger=ThresholdTriple(**data["trigger"]),
            argument=ThresholdTriple(**data["argument"]),
        )


@dataclass(frozen=True)
class Partition:
    """Disjoint split of a disagreement set; the union is the input.

    Items are whatever was filtered - ScoredEvent at the trigger level,
    ScoredArgument at the argument level.
    """

    retained_tagger: tuple
    retained_smoa: tuple
    removed: tuple
    reflect: tuple

    def __len__(self) -> int:
        return (
            len(self.retained_tagger)
            + len(self.retained_smoa)
            + len(self.removed)
            + len(self.reflect)
        )


def score_smoa_confidence(event: EventMention, ledger: VoteLedger, n: int) -> float:
    """Fraction of the n agents that made exactly this prediction."""
    if n < 1:
        raise ConfigurationError("agent count must be >= 1")
    return len(ledger.votes(canonical_key(event))) / n


def _resolve_confidence(item, ledger: VoteLedger | None, n: int | None) -> float:
    if item.confidence is not None:
        return item.confidence
    event = getattr(item, "event", None)
    if event is None or item.source is not Source.SMOA or ledger is None or n is None:
        raise ConfigurationError(
            "an unscored disagreement needs an SMOA event source plus ledger and agent count"
        )
    return score_smoa_confidence(event, ledger, n)


def filter_disagreements(
    dis,
    thresholds: ThresholdTriple,
    ledger: VoteLedger | None = None,
    n: int | None = None,
) -> Partition:
    """Partition disagreement predictions into retained / removed / reflect.

    Tagger-side events are kept iff their confidence reaches theta_s (there
    is no tagger reflection band). Ensemble-side events are kept at or above
    theta_smoa_hi, dropped below theta_smoa_lo, and reflected in between.
    """
    retained_tagger: list = []
    retained_smoa: list = []
    removed: list = []
    reflect: list = []
    for item in dis:
        conf = _resolve_confidence(item, ledger, n)
        if item.source is Source.TAGGER:
            (retained_tagger if conf >= thresholds.theta_s else removed).append(item)
        elif conf >= thresholds.theta_smoa_hi:
            retained_smoa.append(item)
        elif conf < thresholds.theta_smoa_lo:
            removed.append(item)
        else:
            reflect.append(item)
    return Partition(
        retained_tagger=tuple(retained_tagger),
        retained_smoa=tuple(retained_smoa),
        removed=tuple(removed),
        reflect=tuple(reflect),
    )


def filter_disagreements_combined(
    dis,
    tau: float,
    ledger: VoteLedger | None = None,
    n: int | None = None,
) -> tuple[tuple, tuple]:
    """Single-threshold variant: (retained, ambiguous-for-reflection).

    Each disagreement is single-source by construction, so the combined
    confidence (sum of per-model confidences over the number of models
    predicting it) reduces to the event's own confidence. Nothing is
    removed outright; everything below tau goes to reflection.
    """
    high: list = []
    ambiguous: list = []
    for item in dis:
        conf = _resolve_confidence(item, ledger, n)
        (high if conf >= tau else ambiguous).append(item)
    return tuple(high), tuple(ambiguous)


def save_threshold_set(thresholds: ThresholdSet, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(thresholds.as_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_threshold_set(path: str | Path) -> ThresholdSet:
    with open(path, encoding="utf-8") as fh:
        return ThresholdSet.from_dict(json.load(fh))


def bundled_thresholds(model: str, dataset: str, temperature: float | str) -> ThresholdSet:
    """Look up the packaged per-(model, dataset, temperature) thresholds.

    Models: phi-3, llama-3.1. Datasets: casie, m2e2, mlee. Temperatures:
    0.1, 0.6, 0.9. Case-insensitive.
    """
    table = json.loads(
        resources.files("revent.data").joinpath("thresholds.json").read_text("utf-8")
    )
    temp_key = f"{float(temperature):g}"
    try:
        trig = table["trigger"][model.lower()][dataset.lower()][temp_key]
        arg = table["argument"][model.lower()][dataset.lower()][temp_key]
    except KeyError as exc:
        raise ConfigurationError(
            f"no bundled thresholds for model={model!r} dataset={dataset!r} "
            f"temperature={temp_key!r}"
        ) from exc
    return ThresholdSet(trigger=ThresholdTriple(**trig), argument=ThresholdTriple(**arg))
