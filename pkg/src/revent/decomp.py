"""Decomposed instruction dataset generation.

Thirteen task variants isolate the stages of event extraction - from
trigger detection through role assignment up to full structure
construction - so a model can be fine-tuned on the complete reasoning
chain. Every prompt follows the same six-part canon (role, task, rules,
strict output format, fenced example, query) and every answer is a fenced
block under a single top-level key, so answers round-trip through
``parse_record_answer``.

Negative candidates for trigger discrimination are n-grams that occur
exactly once in the passage, share no substring with any gold trigger, sit
within a three-token window of a trigger, and pass a part-of-speech gate
(verb / noun / determiner; the gate is pluggable, with a lexicon-and-suffix
heuristic as the default). At most three negatives per document.
"""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .errors import ContractError
from .fencing import events_to_payload, parse_answer, render_answer
from .model import Document, EventMention, Span

__all__ = [
    "TaskVariant",
    "InstructionRecord",
    "WHOLE_DOCUMENT_VARIANTS",
    "extraction_prompt",
    "render_instruction",
    "sample_negative_ngrams",
    "generate_dataset",
    "write_dataset",
    "parse_record_answer",
    "default_pos_gate",
]


class TaskVariant(Enum):
    FULL_STRUCTURE = "full_structure_construction"
    ROLE_ABLATED = "role_ablated_construction"
    TRIGGER_DETECTION = "trigger_detection_only"
    TRIGGER_TYPE_SINGLE = "trigger_type_classification_single"
    TRIGGER_TYPE_MULTI = "trigger_type_classification_multi"
    TRIGGER_DISCRIMINATION_SINGLE = "trigger_discrimination_single"
    TRIGGER_DISCRIMINATION_MULTI = "trigger_discrimination_multi"
    EVENT_DETECTION_JOINT = "event_detection_joint"
    ARG_EXTRACTION_SINGLE = "argument_extraction_single"
    ARG_EXTRACTION_MULTI = "argument_extraction_multi"
    ARG_EXTRACTION_JOINT = "argument_extraction_joint"
    ROLE_ASSIGNMENT_SINGLE = "role_assignment_single"
    ROLE_ASSIGNMENT_MULTI = "role_assignment_multi"


# Variants that emit exactly one record per document, annotated or not.
WHOLE_DOCUMENT_VARIANTS = frozenset({
    TaskVariant.FULL_STRUCTURE,
    TaskVariant.TRIGGER_DETECTION,
    TaskVariant.TRIGGER_TYPE_MULTI,
    TaskVariant.EVENT_DETECTION_JOINT,
    TaskVariant.ARG_EXTRACTION_MULTI,
    TaskVariant.ARG_EXTRACTION_JOINT,
})

ANSWER_KEYS = {
    TaskVariant.FULL_STRUCTURE: "Events",
    TaskVariant.ROLE_ABLATED: "Events",
    TaskVariant.TRIGGER_DETECTION: "Triggers",
    TaskVariant.TRIGGER_TYPE_SINGLE: "EventType",
    TaskVariant.TRIGGER_TYPE_MULTI: "TriggerTypes",
    TaskVariant.TRIGGER_DISCRIMINATION_SINGLE: "Classification",
    TaskVariant.TRIGGER_DISCRIMINATION_MULTI: "ClassificationMap",
    TaskVariant.EVENT_DETECTION_JOINT: "DetectedEvents",
    TaskVariant.ARG_EXTRACTION_SINGLE: "Arguments",
    TaskVariant.ARG_EXTRACTION_MULTI: "ArgumentLists",
    TaskVariant.ARG_EXTRACTION_JOINT: "EventArguments",
    TaskVariant.ROLE_ASSIGNMENT_SINGLE: "Role",
    TaskVariant.ROLE_ASSIGNMENT_MULTI: "RoleAssignments",
}

MASK_TOKEN = "<masked>"


@dataclass(frozen=True)
class InstructionRecord:
    variant: TaskVariant
    prompt: str
    answer: str
    doc_id: str
    provenance: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "variant": self.variant.value,
            "prompt": self.prompt,
            "answer": self.answer,
            "doc_id": self.doc_id,
            "provenance": self.provenance,
        }


def parse_record_answer(record: InstructionRecord):
    """Parse a record's fenced answer back to its payload (round-trip)."""
    _, payload = parse_answer(record.answer, expected_key=ANSWER_KEYS[record.variant])
    return payload


# --- prompt canon ---------------------------------------------------------

def _render_prompt(
    role: str,
    task: str,
    rules: list[str],
    write_hint: str,
    example_body: str,
    doc: Document,
    context_blocks: list[str],
    question: str,
) -> str:
    lines = [role, task, "", "Generation Rules:"]
    lines += [f"{i}. {rule}" for i, rule in enumerate(rules, start=1)]
    lines += [
        "",
        "Output Format (strict):",
        "- Wrap the answer in triple backticks (```).",
        f"- Write: {write_hint}",
        "",
        "Example:",
        "```",
        example_body,
        "```",
        "",
        "Passage:",
        f'"{doc.text}"',
    ]
    for block in context_blocks:
        lines += ["", block]
    lines += ["", f"Q: {question}"]
    return "\n".join(lines)


def _ordered_gold(doc: Document) -> list[EventMention]:
    if doc.gold_events is None:
        raise ContractError(f"doc {doc.doc_id!r} has no gold events to render")
    return sorted(
        doc.gold_events,
        key=lambda e: (e.trigger.start, e.trigger.end, e.event_type),
    )


def _j(value) -> str:
    return json.dumps(value, ensure_ascii=False)


def extraction_prompt(doc: Document) -> str:
    """The full-structure prompt sent to extraction agents (no gold needed)."""
    return _render_prompt(
        role="You are an event extractor.",
        task="Extract every event in the passage: each trigger, its event type, and its arguments with roles.",
        rules=[
            "List events in the exact order their triggers appear in the passage.",
            "Copy trigger and argument texts verbatim from the passage.",
            "Only include events that the passage supports.",
        ],
        write_hint='Events = [{"trigger": "t", "type": "T", "arguments": [{"text": "a", "role": "R"}]}, ...].',
        example_body='Events = [{"trigger": "therapy", "type": "Treatment", "arguments": [{"text": "insulin", "role": "Instrument"}]}]',
        doc=doc,
        context_blocks=[],
        question="What are the events in the passage?",
    )


# --- negative sampling ----------------------------------------------------

_DETERMINERS = frozenset(
    "the a an this that these those his her its their our my your some any "
    "each every no all both another".split()
)
_CLOSED_CLASS_REJECT = frozenset(
    "of in on at by with from to for as into over under between during "
    "after before and or but nor so yet if while because although when "
    "where he she it they we you i who whom which what there here not".split()
)


def default_pos_gate(token: str) -> bool:
    """Heuristic verb/noun/determiner gate for negative candidates.

    Determiners come from a closed lexicon; prepositions, conjunctions,
    pronouns, and -ly adverbs are rejected; remaining alphabetic tokens
    count as noun/verb material.
    """
    lower = token.lower()
    if lower in _DETERMINERS:
        return True
    if lower in _CLOSED_CLASS_REJECT:
        return False
    if not token.isalpha():
        return False
    if lower.endswith("ly") and len(lower) > 3:
        return False
    return True


def _occurrence_count(text: str, needle: str) -> int:
    count, start = 0, 0
    while True:
        idx = text.find(needle, start)
        if idx < 0:
            return count
        count += 1
        start = idx + 1


def _tokens_with_offsets(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(), m.start(), m.end()) for m in re.finditer(r"\S+", text)]


def _strip_token(token: str, start: int) -> tuple[str, int, int] | None:
    stripped = token.strip(string.punctuation)
    if not stripped:
        return None
    offset = token.find(stripped)
    return (stripped, start + offset, start + offset + len(stripped))


def sample_negative_ngrams(
    doc: Document,
    gold_triggers: list[Span],
    k: int = 3,
    seed: int = 0,
    pos_gate: Callable[[str], bool] = default_pos_gate,
) -> list[Span]:
    """Up to k hard-negative n-grams near the gold triggers.

    Every returned span occurs exactly once in the passage, shares no
    substring (textually or positionally) with any gold trigger, lies
    within a three-token window of some trigger, and has every token pass
    the part-of-speech gate. Deterministic for a fixed seed; returns fewer
    than k when the candidate pool is smaller.
    """
    if k > 3:
        raise ContractError("at most three negatives per document")
    if k < 1 or not gold_triggers:
        return []

    raw_tokens = _tokens_with_offsets(doc.text)
    trigger_token_idx: set[int] = set()
    for ti, (_, tstart, tend) in enumerate(raw_tokens):
        for trig in gold_triggers:
            if tstart < trig.end and trig.start < tend:
                trigger_token_idx.add(ti)
    if not trigger_token_idx:
        return []

    stripped = []
    for idx, (tok, tstart, _) in enumerate(raw_tokens):
        cleaned = _strip_token(tok, tstart)
        if cleaned is not None:
            stripped.append((idx, *cleaned))

    candidates: list[Span] = []
    for pos, (idx, _, _, _) in enumerate(stripped):
        for length in (1, 2, 3):
            window = stripped[pos:pos + length]
            if len(window) < length:
                break
            if [w[0] for w in window] != list(range(idx, idx + length)):
                break  # tokens must be adjacent in the raw text
            if length > 1 and any(
                raw_tokens[w[0]][0] != w[1] for w in window
            ):
                break  # multi-token candidates use punctuation-free tokens only
            start, end = window[0][2], window[-1][3]
            cand_text = doc.text[start:end]
            if not all(pos_gate(w[1]) for w in window):
                continue
            if _occurrence_count(doc.text, cand_text) != 1:
                continue
            if any(
                cand_text in trig.text or trig.text in cand_text
                or (start < trig.end and trig.start < end)
                for trig in gold_triggers
            ):
                continue
            # token distance to the nearest trigger token (0 = overlapping,
            # which the positional check above already excluded)
            c_lo, c_hi = idx, idx + length - 1
            gap = min(max(t - c_hi, c_lo - t, 0) for t in trigger_token_idx)
            if not 0 < gap <= 3:
                continue
            candidates.append(Span(cand_text, start, end))

    candidates.sort(key=lambda s: (s.start, s.end))
    rng = random.Random(f"{seed}:{doc.doc_id}:negatives")
    picked = candidates if len(candidates) <= k else rng.sample(candidates, k)
    return sorted(picked, key=lambda s: (s.start, s.end))


# --- per-variant rendering ------------------------------------------------

def _events_payload_masked(events: list[EventMention], masked: tuple[int, int]) -> list[dict]:
    payload = events_to_payload(events)
    ti, ai = masked
    payload[ti]["arguments"][ai]["role"] = MASK_TOKEN
    return payload


def render_instruction(
    variant: TaskVariant, doc: Document, target=None
) -> InstructionRecord:
    """Render one prompt/answer pair.

    ``target`` selects the focus where the variant needs one: a trigger
    index for single-trigger variants, a (trigger, argument) index pair for
    role assignment (single) and role-ablated construction, a (span,
    is_trigger) pair for single discrimination, and a list of negative
    spans for multi discrimination.
    """
    events = _ordered_gold(doc)
    key = ANSWER_KEYS[variant]
    prov: dict = {}

    def trigger_at(index) -> EventMention:
        if not isinstance(index, int) or not 0 <= index < len(events):
            raise ContractError(f"{variant.value}: invalid trigger index {index!r}")
        return events[index]

    if variant is TaskVariant.FULL_STRUCTURE:
        prompt = extraction_prompt(doc)
        answer = render_answer(key, events_to_payload(events))

    elif variant is TaskVariant.ROLE_ABLATED:
        if (
            not isinstance(target, tuple) or len(target) != 2
            or not 0 <= target[0] < len(events)
            or not 0 <= target[1] < len(events[target[0]].arguments)
        ):
            raise ContractError(f"role-ablated target must be a valid (trigger, argument) pair, got {target!r}")
        masked_payload = _events_payload_masked(events, target)
        prompt = _render_prompt(
            role="You are an event extractor.",
            task=f'Complete the event structure below: one argument role is masked as "{MASK_TOKEN}".',
            rules=[
                "Rewrite the complete event list with every argument role filled in.",
                "Keep all triggers, types, and argument texts exactly as given.",
            ],
            write_hint='Events = [{"trigger": "t", "type": "T", "arguments": [{"text": "a", "role": "R"}]}, ...].',
            example_body='Events = [{"trigger": "therapy", "type": "Treatment", "arguments": [{"text": "insulin", "role": "Instrument"}]}]',
            doc=doc,
            context_blocks=["Partial events:\n" + _j(masked_payload)],
            question="What is the complete event list with the masked role restored?",
        )
        answer = render_answer(key, events_to_payload(events))
        prov = {"masked_trigger": target[0], "masked_argument": target[1]}

    elif variant is TaskVariant.TRIGGER_DETECTION:
        prompt = _render_prompt(
            role="You are an event trigger detector.",
            task="List every event trigger phrase in the passage.",
            rules=[
                "List triggers in the exact order they appear in the passage.",
                "Copy each trigger text verbatim; do not include event types.",
            ],
            write_hint='Triggers = ["t1", "t2", ...].',
            example_body='Triggers = ["therapy", "diagnosed"]',
            doc=doc,
            context_blocks=[],
            question="What are the event triggers in the passage?",
        )
        answer = render_answer(key, [e.trigger.text for e in events])

    elif variant is TaskVariant.TRIGGER_TYPE_SINGLE:
        event = trigger_at(target)
        prompt = _render_prompt(
            role="You are an event type classifier.",
            task="Assign the correct event type to the trigger shown below.",
            rules=[
                "Answer with exactly one event type label.",
                "Use the passage context to decide.",
            ],
            write_hint='EventType = "Type".',
            example_body='EventType = "Treatment"',
            doc=doc,
            context_blocks=[],
            question=f'What is the event type of the trigger "{event.trigger.text}"?',
        )
        answer = render_answer(key, event.event_type)
        prov = {"trigger_index": target}

    elif variant is TaskVariant.TRIGGER_TYPE_MULTI:
        prompt = _render_prompt(
            role="You are an event type classifier.",
            task="Assign an event type to each listed trigger.",
            rules=[
                "Assign one event type per listed trigger, in the given order.",
                "Output only the type labels.",
            ],
            write_hint='TriggerTypes = ["Type1", "Type2", ...].',
            example_body='TriggerTypes = ["Treatment", "Diagnosis"]',
            doc=doc,
            context_blocks=["Triggers:\n" + _j([e.trigger.text for e in events])],
            question="What are the event types of the listed triggers, in order?",
        )
        answer = render_answer(key, [e.event_type for e in events])

    elif variant is TaskVariant.TRIGGER_DISCRIMINATION_SINGLE:
        if (
            not isinstance(target, tuple) or len(target) != 2
            or not isinstance(target[0], Span) or not isinstance(target[1], bool)
        ):
            raise ContractError(
                f"single discrimination target must be (span, is_trigger), got {target!r}"
            )
        span, is_trigger = target
        prompt = _render_prompt(
            role="You are an event trigger discriminator.",
            task="Decide whether the candidate phrase below works as an event trigger in the passage.",
            rules=[
                "Classify the phrase as either 'Trigger' or 'Non-Trigger'.",
                "Output strictly in the required format-no extra text.",
            ],
            write_hint='Classification = "Trigger" or Classification = "Non-Trigger".',
            example_body='Classification = "Trigger"',
            doc=doc,
            context_blocks=[],
            question=f"Is the phrase \"{span.text}\" a 'Trigger' or a 'Non-Trigger' in the passage?",
        )
        answer = render_answer(key, "Trigger" if is_trigger else "Non-Trigger")
        prov = {"candidate": [span.start, span.end], "is_trigger": is_trigger}

    elif variant is TaskVariant.TRIGGER_DISCRIMINATION_MULTI:
        if not isinstance(target, list) or not all(isinstance(s, Span) for s in target):
            raise ContractError("multi discrimination target must be a list of negative spans")
        labelled: dict[str, str] = {}
        order: list[tuple[int, int, str, str]] = []
        for e in events:
            order.append((e.trigger.start, e.trigger.end, e.trigger.text, "Trigger"))
        for span in target:
            order.append((span.start, span.end, span.text, "Non-Trigger"))
        order.sort(key=lambda item: (item[0], item[1]))
        for _, _, text, label in order:
            labelled.setdefault(text, label)
        prompt = _render_prompt(
            role="You are an event trigger discriminator.",
            task="Decide for each candidate phrase whether it works as an event trigger in the passage.",
            rules=[
                "Classify each phrase as either 'Trigger' or 'Non-Trigger'.",
                "Output strictly in the required format-no extra text.",
            ],
            write_hint='ClassificationMap = {"phrase1": "Trigger", "phrase2": "Non-Trigger", ...}.',
            example_body='ClassificationMap = {"therapy": "Trigger", "increase dose": "Non-Trigger"}',
            doc=doc,
            context_blocks=["Candidates:\n" + _j(list(labelled))],
            question="For each candidate above, decide whether it is a 'Trigger' or 'Non-Trigger'.",
        )
        answer = render_answer(key, labelled)
        prov = {"negatives": [[s.start, s.end] for s in target]}

    elif variant is TaskVariant.EVENT_DETECTION_JOINT:
        prompt = _render_prompt(
            role="You are an event detector.",
            task="Detect every event trigger in the passage and assign each its event type.",
            rules=[
                "List trigger/type pairs in the exact order the triggers appear in the passage.",
                "Copy trigger texts verbatim from the passage.",
            ],
            write_hint='DetectedEvents = [["trigger", "Type"], ...].',
            example_body='DetectedEvents = [["therapy", "Treatment"]]',
            doc=doc,
            context_blocks=[],
            question="What are the event triggers and their types?",
        )
        answer = render_answer(key, [[e.trigger.text, e.event_type] for e in events])

    elif variant is TaskVariant.ARG_EXTRACTION_SINGLE:
        event = trigger_at(target)
        prompt = _render_prompt(
            role="You are an argument extractor.",
            task="Extract all arguments for the specific trigger shown below.",
            rules=[
                "List arguments in the exact order they appear in the passage.",
                "Ignore argument roles and include only the argument texts.",
            ],
            write_hint='Arguments = ["arg1", "arg2", ...].',
            example_body='Arguments = ["insulin", "VEGF"]',
            doc=doc,
            context_blocks=[],
            question=(
                f'What are the arguments of the trigger "{event.trigger.text}" '
                f'(event type: "{event.event_type}")?'
            ),
        )
        answer = render_answer(key, [a.span.text for a in event.arguments])
        prov = {"trigger_index": target}

    elif variant is TaskVariant.ARG_EXTRACTION_MULTI:
        prompt = _render_prompt(
            role="You are an argument extractor.",
            task="For each listed trigger, extract its argument texts.",
            rules=[
                "Output one argument list per listed trigger, in the given order.",
                "Ignore argument roles and include only the argument texts.",
            ],
            write_hint='ArgumentLists = [["arg1", "arg2"], ...].',
            example_body='ArgumentLists = [["insulin", "VEGF"], []]',
            doc=doc,
            context_blocks=[
                "Triggers:\n" + _j([[e.trigger.text, e.event_type] for e in events])
            ],
            question="What are the arguments of each listed trigger, in order?",
        )
        answer = render_answer(key, [[a.span.text for a in e.arguments] for e in events])

    elif variant is TaskVariant.ARG_EXTRACTION_JOINT:
        prompt = _render_prompt(
            role="You are an argument extractor.",
            task="For each listed trigger, extract its arguments and assign each a semantic role.",
            rules=[
                "Output one argument list per listed trigger, in the given order.",
                "Give every argument exactly two fields: text and role.",
            ],
            write_hint='EventArguments = [[{"text": "a", "role": "R"}], ...].',
            example_body='EventArguments = [[{"text": "insulin", "role": "Instrument"}]]',
            doc=doc,
            context_blocks=[
                "Triggers:\n" + _j([[e.trigger.text, e.event_type] for e in events])
            ],
            question="What are the arguments and roles for each listed trigger, in order?",
        )
        answer = render_answer(
            key,
            [[{"text": a.span.text, "role": a.role} for a in e.arguments] for e in events],
        )

    elif variant is TaskVariant.ROLE_ASSIGNMENT_SINGLE:
        if (
            not isinstance(target, tuple) or len(target) != 2
            or not 0 <= target[0] < len(events)
            or not 0 <= target[1] < len(events[target[0]].arguments)
        ):
            raise ContractError(
                f"role assignment target must be a valid (trigger, argument) pair, got {target!r}"
            )
        event = events[target[0]]
        arg = event.arguments[target[1]]
        prompt = _render_prompt(
            role="You are an argument role classifier.",
            task="Assign the correct semantic role to the argument shown below.",
            rules=[
                "Answer with exactly one role label.",
                "Use the trigger and the passage context to decide.",
            ],
            write_hint='Role = "RoleLabel".',
            example_body='Role = "Instrument"',
            doc=doc,
            context_blocks=[],
            question=(
                f'What is the role of the argument "{arg.span.text}" for the trigger '
                f'"{event.trigger.text}" (event type: "{event.event_type}")?'
            ),
        )
        answer = render_answer(key, arg.role)
        prov = {"trigger_index": target[0], "argument_index": target[1]}

    elif variant is TaskVariant.ROLE_ASSIGNMENT_MULTI:
        event = trigger_at(target)
        if not event.arguments:
            raise ContractError("role assignment (multi) needs a trigger with arguments")
        prompt = _render_prompt(
            role="You are an argument role classifier.",
            task="Assign a semantic role to every candidate argument of the trigger shown below.",
            rules=[
                "Assign one role per candidate argument, in the given order.",
                "Output argument/role pairs only.",
            ],
            write_hint='RoleAssignments = [["arg", "Role"], ...].',
            example_body='RoleAssignments = [["insulin", "Instrument"]]',
            doc=doc,
            context_blocks=[
                f'Trigger:\n"{event.trigger.text}" (type: "{event.event_type}")',
                "Candidate Arguments:\n" + _j([a.span.text for a in event.arguments]),
            ],
            question="What is the role of each candidate argument, in order?",
        )
        answer = render_answer(key, [[a.span.text, a.role] for a in event.arguments])
        prov = {"trigger_index": target}

    else:  # pragma: no cover - enum is closed
        raise ContractError(f"unknown variant {variant!r}")

    return InstructionRecord(
        variant=variant, prompt=prompt, answer=answer, doc_id=doc.doc_id, provenance=prov
    )


def generate_dataset(
    corpus: list[Document],
    variants: set[TaskVariant] | None = None,
    seed: int = 0,
    pos_gate: Callable[[str], bool] = default_pos_gate,
) -> list[InstructionRecord]:
    """Emit the decomposed curriculum for an annotated corpus.

    Whole-document variants emit one record per document (empty answers on
    zero-event documents); single-target variants emit one record per gold
    trigger or (trigger, argument) pair; role-ablated construction masks
    one uniformly chosen argument role per eligible document; and the
    discrimination variants draw their hard negatives per document. Output
    order is (document, variant, target) regardless of execution order, and
    the result is deterministic for a fixed seed.
    """
    chosen = variants if variants is not None else set(TaskVariant)
    records: list[InstructionRecord] = []
    for doc in corpus:
        events = _ordered_gold(doc)
        negatives = sample_negative_ngrams(
            doc, [e.trigger for e in events], k=3, seed=seed, pos_gate=pos_gate
        )
        for variant in TaskVariant:
            if variant not in chosen:
                continue
            if variant in WHOLE_DOCUMENT_VARIANTS:
                records.append(render_instruction(variant, doc))
            elif variant is TaskVariant.ROLE_ABLATED:
                pairs = [
                    (ti, ai)
                    for ti, e in enumerate(events)
                    for ai in range(len(e.arguments))
                ]
                if pairs:
                    rng = random.Random(f"{seed}:{doc.doc_id}:ablate")
                    records.append(render_instruction(variant, doc, rng.choice(pairs)))
            elif variant in (TaskVariant.TRIGGER_TYPE_SINGLE, TaskVariant.ARG_EXTRACTION_SINGLE):
                for ti in range(len(events)):
                    records.append(render_instruction(variant, doc, ti))
            elif variant is TaskVariant.TRIGGER_DISCRIMINATION_SINGLE:
                for e in events:
                    records.append(render_instruction(variant, doc, (e.trigger, True)))
                for span in negatives:
                    records.append(render_instruction(variant, doc, (span, False)))
            elif variant is TaskVariant.TRIGGER_DISCRIMINATION_MULTI:
                if negatives:
                    records.append(render_instruction(variant, doc, list(negatives)))
            elif variant is TaskVariant.ROLE_ASSIGNMENT_SINGLE:
                for ti, e in enumerate(events):
                    for ai in range(len(e.arguments)):
                        records.append(render_instruction(variant, doc, (ti, ai)))
            elif variant is TaskVariant.ROLE_ASSIGNMENT_MULTI:
                for ti, e in enumerate(events):
                    if e.arguments:
                        records.append(render_instruction(variant, doc, ti))
    return records


def write_dataset(records: list[InstructionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_record(), ensure_ascii=False) + "\n")
