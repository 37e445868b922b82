import json
import random

import pytest

from revent.backends import ChatRequest
from revent.errors import ContractError, ReplyParseError
from revent.fencing import render_argument_verdicts, render_classification_map
from revent.model import ArgumentMention, Document, EventMention, Span
from revent.reflection import (
    AuditLog,
    ReflectionConfig,
    ReflectionItem,
    build_argument_prompt,
    build_trigger_prompt,
    parse_argument_response,
    parse_trigger_response,
    reflect,
)


class RecordingBackend:
    def __init__(self, reply_fn):
        self.reply_fn = reply_fn
        self.requests: list[ChatRequest] = []

    def complete(self, request: ChatRequest) -> str:
        self.requests.append(request)
        return self.reply_fn(request)


def _doc(text="the dead were found after the shot and the bombing", doc_id="d"):
    return Document(doc_id, text)


def _span(doc, surface):
    start = doc.text.index(surface)
    return Span(surface, start, start + len(surface))


def test_reflection_config_defaults():
    config = ReflectionConfig()
    assert config.temperature == 0.1
    assert config.max_output_tokens == 4096
    assert config.length_penalty == 1.05
    assert config.retry_limit == 1


def test_trigger_prompt_contains_template_parts():
    doc = _doc()
    prompt = build_trigger_prompt(doc, [_span(doc, "dead"), _span(doc, "shot")])
    assert '"dead"' in prompt and '"shot"' in prompt
    assert doc.text in prompt
    assert (
        '```ClassificationMap = {"therapy": "Trigger", "increase dose": "Non-Trigger"}```'
        in prompt
    )
    assert prompt.endswith(
        "Q: For each candidate above, decide whether it is a 'Trigger' or 'Non-Trigger'."
    )


def test_trigger_prompt_single_candidate_same_shape():
    doc = _doc()
    two = build_trigger_prompt(doc, [_span(doc, "dead"), _span(doc, "shot")])
    one = build_trigger_prompt(doc, [_span(doc, "dead")])
    # Identical template; only the candidate lists differ.
    assert one.replace('["dead"]', "@") == two.replace('["dead", "shot"]', "@")


def test_trigger_prompt_requires_candidates():
    with pytest.raises(ContractError):
        build_trigger_prompt(_doc(), [])


def test_argument_prompt_lists_candidates_in_order():
    doc = Document("d", "the assassin shot Gandhi and a man")
    trig = EventMention(_span(doc, "shot"), "Conflict:Attack")
    cands = [
        ArgumentMention(_span(doc, "Gandhi"), "Victim"),
        ArgumentMention(_span(doc, "man"), "Victim"),
    ]
    prompt = build_argument_prompt(doc, trig, cands)
    assert prompt.index('"Gandhi"') < prompt.index('{"text": "man"')
    assert '"shot" (type: "Conflict:Attack")' in prompt
    assert prompt.endswith("Q: For each candidate above, set `is_correct` to `true` or `false`.")


def test_argument_prompt_requires_grounded_trigger():
    doc = _doc()
    bad_trigger = EventMention(Span("zzz", 0, 3), "T")
    from revent.errors import SpanValidationError

    with pytest.raises(SpanValidationError):
        build_argument_prompt(doc, bad_trigger, [ArgumentMention(_span(doc, "dead"), "R")])


def test_parse_trigger_response_walkthrough():
    raw = '```ClassificationMap = {"dead": "Trigger", "shot": "Non-Trigger"}```'
    verdict = parse_trigger_response(raw, ["dead", "shot"])
    assert verdict.is_trigger("dead") is True
    assert verdict.is_trigger("shot") is False


def test_parse_trigger_response_template_example():
    raw = '```ClassificationMap = {"therapy": "Trigger", "increase dose": "Non-Trigger"}```'
    verdict = parse_trigger_response(raw, ["therapy", "increase dose"])
    assert verdict.as_dict() == {"therapy": "Trigger", "increase dose": "Non-Trigger"}


def test_parse_trigger_response_ignores_surrounding_prose():
    raw = 'Sure, here is my answer:\n```ClassificationMap = {"dead": "Trigger"}```\nDone.'
    assert parse_trigger_response(raw, ["dead"]).is_trigger("dead")


def test_parse_trigger_response_missing_candidate_kept():
    raw = '```ClassificationMap = {"dead": "Trigger"}```'
    verdict = parse_trigger_response(raw, ["dead", "shot"])
    assert verdict.is_trigger("shot") is True  # fallback keeps unanswered candidates


def test_parse_trigger_response_bad_verdict_is_parse_error():
    with pytest.raises(ReplyParseError):
        parse_trigger_response('```ClassificationMap = {"dead": "Maybe"}```', ["dead"])


def test_parse_trigger_response_no_fence_is_parse_error():
    with pytest.raises(ReplyParseError):
        parse_trigger_response("ClassificationMap = {}", ["dead"])


def test_parse_argument_response_keeps_flagged():
    raw = '```\n[{"text": "Gandhi", "role": "Victim", "is_correct": true}]\n```'
    verdict = parse_argument_response(raw, [("Gandhi", "Victim")])
    assert verdict.entries == (("Gandhi", "Victim", True),)


def test_parse_argument_response_added_entry_is_error():
    raw = (
        '```\n[{"text": "Gandhi", "role": "Victim", "is_correct": true},'
        ' {"text": "gun", "role": "Instrument", "is_correct": true}]\n```'
    )
    with pytest.raises(ReplyParseError):
        parse_argument_response(raw, [("Gandhi", "Victim")])


def test_parse_argument_response_reorder_is_error():
    raw = (
        '```\n[{"text": "man", "role": "Victim", "is_correct": true},'
        ' {"text": "Gandhi", "role": "Victim", "is_correct": false}]\n```'
    )
    with pytest.raises(ReplyParseError):
        parse_argument_response(raw, [("Gandhi", "Victim"), ("man", "Victim")])


def test_parse_argument_response_all_false_empty_result():
    raw = '```\n[{"text": "a", "role": "R", "is_correct": false}]\n```'
    verdict = parse_argument_response(raw, [("a", "R")])
    assert verdict.entries == (("a", "R", False),)


def test_prompt_parse_round_trip_random():
    rng = random.Random(23)
    words = ["alpha", "beta", "gamma", "delta", 'quo"ted', "epsilon"]
    for _ in range(200):
        phrases = rng.sample(words, rng.randint(1, len(words)))
        assignment = {p: rng.random() < 0.5 for p in phrases}
        raw = render_classification_map(
            {p: "Trigger" if keep else "Non-Trigger" for p, keep in assignment.items()}
        )
        verdict = parse_trigger_response(raw, phrases)
        assert {p: verdict.is_trigger(p) for p in phrases} == assignment

        cands = [(p, rng.choice(["Agent", "Victim"])) for p in phrases]
        flags = [rng.random() < 0.5 for _ in cands]
        raw = render_argument_verdicts(
            [(t, r, ok) for (t, r), ok in zip(cands, flags)]
        )
        parsed = parse_argument_response(raw, cands)
        assert [entry[2] for entry in parsed.entries] == flags


def _item(doc, surface, etype, ambiguous, kept=(), pending=()):
    return ReflectionItem(
        event=EventMention(_span(doc, surface), etype),
        trigger_ambiguous=ambiguous,
        kept_arguments=tuple(kept),
        pending_arguments=tuple(pending),
    )


def test_reflect_walkthrough_keeps_dead_drops_nothing_else():
    doc = _doc()
    backend = RecordingBackend(
        lambda req: '```ClassificationMap = {"dead": "Trigger", "shot": "Non-Trigger"}```'
    )
    items = [
        _item(doc, "dead", "Life:Die", ambiguous=True),
        _item(doc, "shot", "Conflict:Attack", ambiguous=True),
    ]
    outcome = reflect(items, doc, backend)
    assert [e.trigger.text for e in outcome.events] == ["dead"]
    assert len(backend.requests) == 1


def test_reflect_empty_input_zero_calls():
    backend = RecordingBackend(lambda req: "unused")
    outcome = reflect([], _doc(), backend)
    assert outcome.events == []
    assert backend.requests == []


def test_rejected_trigger_never_queries_arguments():
    doc = Document("d", "the assassin shot Gandhi")
    pending = [ArgumentMention(_span(doc, "Gandhi"), "Victim")]

    def reply(request):
        channel = request.metadata["channel"]
        if channel == "reflection:triggers":
            return '```ClassificationMap = {"shot": "Non-Trigger"}```'
        raise AssertionError("argument query issued for a rejected trigger")

    backend = RecordingBackend(reply)
    items = [_item(doc, "shot", "Conflict:Attack", ambiguous=True, pending=pending)]
    outcome = reflect(items, doc, backend)
    assert outcome.events == []
    assert len(backend.requests) == 1  # only the trigger query


def test_confirmed_trigger_with_pending_args_queries_arguments():
    doc = Document("d", "the assassin shot Gandhi")
    pending = [ArgumentMention(_span(doc, "Gandhi"), "Victim")]

    def reply(request):
        if request.metadata["channel"] == "reflection:triggers":
            raise AssertionError("no trigger query expected")
        return '```\n[{"text": "Gandhi", "role": "Victim", "is_correct": true}]\n```'

    backend = RecordingBackend(reply)
    items = [_item(doc, "shot", "Conflict:Attack", ambiguous=False, pending=pending)]
    outcome = reflect(items, doc, backend)
    assert len(outcome.events) == 1
    assert [a.span.text for a in outcome.events[0].arguments] == ["Gandhi"]
    assert len(backend.requests) == 1


def test_all_trigger_mock_is_identity():
    doc = _doc()

    def reply(request):
        if request.metadata["channel"] == "reflection:triggers":
            candidates = json.loads(request.metadata["candidates"])
            return render_classification_map({c: "Trigger" for c in candidates})
        candidates = json.loads(request.metadata["candidates"])
        return render_argument_verdicts([(t, r, True) for t, r in candidates])

    backend = RecordingBackend(reply)
    pending = [ArgumentMention(_span(doc, "bombing"), "Target")]
    items = [
        _item(doc, "dead", "Life:Die", ambiguous=True),
        _item(doc, "shot", "Conflict:Attack", ambiguous=True, pending=pending),
    ]
    outcome = reflect(items, doc, backend)
    assert [e.trigger.text for e in outcome.events] == ["dead", "shot"]
    assert [a.span.text for a in outcome.events[1].arguments] == ["bombing"]


def test_parse_failure_fallback_keeps_candidates_and_audits():
    doc = _doc()
    backend = RecordingBackend(lambda req: "garbage with no fence")
    audit = AuditLog()
    items = [_item(doc, "dead", "Life:Die", ambiguous=True)]
    outcome = reflect(items, doc, backend, ReflectionConfig(retry_limit=1), audit)
    assert [e.trigger.text for e in outcome.events] == ["dead"]
    assert len(backend.requests) == 2  # initial + one retry
    assert audit.entries[-1]["fallback"] is True
    assert audit.entries[-1]["outcome"] == "fallback-keep-all"


def test_backend_call_count_bound():
    doc = _doc()
    calls = []

    def reply(request):
        calls.append(request.metadata["channel"])
        return "never parseable"

    config = ReflectionConfig(retry_limit=2)
    pending = [ArgumentMention(_span(doc, "bombing"), "Target")]
    items = [_item(doc, "dead", "Life:Die", ambiguous=True, pending=pending)]
    reflect(items, doc, RecordingBackend(reply), config)
    # one trigger query + one argument query, each attempted <= 1 + retry_limit times
    assert len(calls) <= (1 + config.retry_limit) * 2


def test_audit_log_write_is_deterministic(tmp_path):
    audit = AuditLog()
    audit.record(phase="p", doc_id="d", prompt="x", reply="y", outcome="ok", fallback=False)
    p1, p2 = tmp_path / "a1.jsonl", tmp_path / "a2.jsonl"
    audit.write(p1)
    audit.write(p2)
    assert p1.read_bytes() == p2.read_bytes()
