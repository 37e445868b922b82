import json

import pytest

from revent.decomp import (
    WHOLE_DOCUMENT_VARIANTS,
    InstructionRecord,
    TaskVariant,
    default_pos_gate,
    extraction_prompt,
    generate_dataset,
    parse_record_answer,
    render_instruction,
    sample_negative_ngrams,
    write_dataset,
)
from revent.errors import ContractError
from revent.model import ArgumentMention, Document, EventMention, Span
from revent.simulate import make_synthetic_corpus

FIG_PASSAGE = (
    "US Needs Broad Coalition to Fight IS Militants, Analysts Say-With President "
    "Barack Obama setting a new strategy to combat Islamic State militants (also "
    "known as ISIL or ISIS) in Iraq and Syria, analysts say he will need to build "
    "a broad-based coalition of international and regional players to support "
    "those efforts"
)

EXPECTED_ARG_SINGLE_PROMPT = f"""You are an argument extractor.
Extract all arguments for the specific trigger shown below.

Generation Rules:
1. List arguments in the exact order they appear in the passage.
2. Ignore argument roles and include only the argument texts.

Output Format (strict):
- Wrap the answer in triple backticks (```).
- Write: Arguments = ["arg1", "arg2", ...].

Example:
```
Arguments = ["insulin", "VEGF"]
```

Passage:
"{FIG_PASSAGE}"

Q: What are the arguments of the trigger "combat" (event type: "Conflict:Attack")?"""


def _fig_doc():
    combat = FIG_PASSAGE.index("combat")
    militants = FIG_PASSAGE.index("militants")  # the lowercase occurrence
    event = EventMention(
        Span("combat", combat, combat + 6),
        "Conflict:Attack",
        (ArgumentMention(Span("militants", militants, militants + 9), "Target"),),
    )
    return Document("fig", FIG_PASSAGE, (event,))


def test_argument_extraction_single_matches_template_bytes():
    record = render_instruction(TaskVariant.ARG_EXTRACTION_SINGLE, _fig_doc(), 0)
    assert record.prompt == EXPECTED_ARG_SINGLE_PROMPT
    assert record.answer == '```\nArguments = ["militants"]\n```'


def test_trigger_detection_empty_document():
    doc = Document("empty", "nothing to see here", ())
    record = render_instruction(TaskVariant.TRIGGER_DETECTION, doc)
    assert parse_record_answer(record) == []


def test_role_assignment_single_answer_is_one_role():
    record = render_instruction(TaskVariant.ROLE_ASSIGNMENT_SINGLE, _fig_doc(), (0, 0))
    assert parse_record_answer(record) == "Target"


def test_invalid_target_is_contract_error():
    with pytest.raises(ContractError):
        render_instruction(TaskVariant.ARG_EXTRACTION_SINGLE, _fig_doc(), 5)
    with pytest.raises(ContractError):
        render_instruction(TaskVariant.ROLE_ASSIGNMENT_SINGLE, _fig_doc(), (0, 9))
    with pytest.raises(ContractError):
        render_instruction(TaskVariant.TRIGGER_DISCRIMINATION_SINGLE, _fig_doc(), "combat")


def test_extraction_prompt_needs_no_gold():
    doc = Document("raw", FIG_PASSAGE)  # no gold events
    prompt = extraction_prompt(doc)
    assert FIG_PASSAGE in prompt
    assert "Events =" in prompt


def test_count_identities_on_synthetic_corpus():
    corpus = make_synthetic_corpus(40, seed=3)
    records = generate_dataset(corpus, seed=5)
    by_variant: dict[TaskVariant, list[InstructionRecord]] = {v: [] for v in TaskVariant}
    for record in records:
        by_variant[record.variant].append(record)

    n_docs = len(corpus)
    n_triggers = sum(len(d.gold_events) for d in corpus)
    for variant in WHOLE_DOCUMENT_VARIANTS:
        assert len(by_variant[variant]) == n_docs, variant
    assert len(by_variant[TaskVariant.TRIGGER_TYPE_SINGLE]) == n_triggers
    assert len(by_variant[TaskVariant.ARG_EXTRACTION_SINGLE]) == n_triggers
    n_args = sum(len(e.arguments) for d in corpus for e in d.gold_events)
    assert len(by_variant[TaskVariant.ROLE_ASSIGNMENT_SINGLE]) == n_args
    docs_with_args = sum(
        1 for d in corpus if any(e.arguments for e in d.gold_events)
    )
    assert len(by_variant[TaskVariant.ROLE_ABLATED]) == docs_with_args


def test_all_answers_round_trip():
    corpus = make_synthetic_corpus(15, seed=9)
    records = generate_dataset(corpus, seed=1)
    assert records, "generator emitted nothing"
    seen_variants = set()
    for record in records:
        payload = parse_record_answer(record)  # raises on malformed answers
        seen_variants.add(record.variant)
        if record.variant is TaskVariant.TRIGGER_DISCRIMINATION_MULTI:
            assert set(payload.values()) <= {"Trigger", "Non-Trigger"}
    assert TaskVariant.FULL_STRUCTURE in seen_variants


def test_deterministic_for_fixed_seed():
    corpus = make_synthetic_corpus(10, seed=2)
    a = generate_dataset(corpus, seed=4)
    b = generate_dataset(corpus, seed=4)
    assert a == b
    c = generate_dataset(corpus, seed=5)
    assert [r.prompt for r in a] != [r.prompt for r in c] or a == c


def test_role_ablated_masks_exactly_one_role():
    corpus = [d for d in make_synthetic_corpus(10, seed=8)
              if any(e.arguments for e in d.gold_events)]
    records = [
        r for r in generate_dataset(corpus, seed=3)
        if r.variant is TaskVariant.ROLE_ABLATED
    ]
    assert records
    for record in records:
        assert record.prompt.count("<masked>") >= 1
        partial = record.prompt.split("Partial events:\n", 1)[1].split("\n\nQ:", 1)[0]
        payload = json.loads(partial)
        masked = [
            a for e in payload for a in e["arguments"] if a["role"] == "<masked>"
        ]
        assert len(masked) == 1
        # the answer restores the full structure
        restored = parse_record_answer(record)
        assert all(a["role"] != "<masked>" for e in restored for a in e["arguments"])


def test_full_structure_answer_parses_as_agent_reply():
    from revent.ingest import parse_agent_output

    corpus = make_synthetic_corpus(5, seed=12)
    for record in generate_dataset(corpus, variants={TaskVariant.FULL_STRUCTURE}, seed=0):
        doc = next(d for d in corpus if d.doc_id == record.doc_id)
        events = parse_agent_output(record.answer, doc)
        assert {(e.trigger.text, e.event_type) for e in events} == {
            (e.trigger.text, e.event_type) for e in doc.gold_events
        }


def _window_distance(text, span, triggers):
    tokens = [(m.start(), m.end()) for m in __import__("re").finditer(r"\S+", text)]

    def covering(s, e):
        return [i for i, (ts, te) in enumerate(tokens) if ts < e and s < te]

    cand = covering(span.start, span.end)
    best = None
    for trig in triggers:
        for ti in covering(trig.start, trig.end):
            for ci in cand:
                d = abs(ti - ci)
                best = d if best is None else min(best, d)
    return best


def test_negative_ngrams_satisfy_all_constraints():
    corpus = make_synthetic_corpus(60, seed=21)
    checked = 0
    for doc in corpus:
        triggers = [e.trigger for e in doc.gold_events]
        negatives = sample_negative_ngrams(doc, triggers, k=3, seed=11)
        assert len(negatives) <= 3
        for span in negatives:
            checked += 1
            assert doc.contains(span)
            # (i) occurs exactly once
            count, start = 0, 0
            while True:
                idx = doc.text.find(span.text, start)
                if idx < 0:
                    break
                count += 1
                start = idx + 1
            assert count == 1
            # (ii) no substring sharing with any gold trigger
            for trig in triggers:
                assert span.text not in trig.text and trig.text not in span.text
                assert not (span.start < trig.end and trig.start < span.end)
            # (iii) within a three-token window of some trigger
            assert _window_distance(doc.text, span, triggers) <= 3
            # (iv) POS gate passes for every token
            for token in span.text.split():
                assert default_pos_gate(token.strip(".,;:!?"))
    assert checked > 0


def test_negative_uniqueness_constraint_blocks_repeats():
    text = "officials met the coalition and the coalition met officials again summit"
    trig = Span("summit", text.index("summit"), text.index("summit") + 6)
    doc = Document("d", text, (EventMention(trig, "Contact:Meet"),))
    negatives = sample_negative_ngrams(doc, [trig], k=3, seed=0)
    assert all(n.text != "coalition" for n in negatives)
    assert all(n.text != "officials" for n in negatives)


def test_negative_substring_constraint():
    text = "forces combat losses while combative talks continue"
    trig = Span("combat", text.index("combat"), text.index("combat") + 6)
    doc = Document("d", text, (EventMention(trig, "Conflict:Attack"),))
    negatives = sample_negative_ngrams(doc, [trig], k=3, seed=0)
    for span in negatives:
        assert "combat" not in span.text


def test_negative_pool_smaller_than_k():
    text = "talks summit end"
    trig = Span("summit", 6, 12)
    doc = Document("d", text, (EventMention(trig, "Contact:Meet"),))
    negatives = sample_negative_ngrams(doc, [trig], k=3, seed=0)
    assert len(negatives) <= 3  # returns what exists, no error


def test_k_above_three_rejected():
    doc = Document("d", "a b c", ())
    with pytest.raises(ContractError):
        sample_negative_ngrams(doc, [], k=4, seed=0)


def test_write_dataset_jsonl(tmp_path):
    corpus = make_synthetic_corpus(3, seed=1)
    records = generate_dataset(corpus, variants={TaskVariant.TRIGGER_DETECTION}, seed=0)
    out = tmp_path / "decomp.jsonl"
    write_dataset(records, out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(records)
    first = json.loads(lines[0])
    assert set(first) == {"variant", "prompt", "answer", "doc_id", "provenance"}
    assert first["variant"] == "trigger_detection_only"
