"""Self-ensemble orchestration: fan out one extraction prompt to n agent
instances, parse replies, and aggregate the deduplicated union with
per-event vote bookkeeping.

Agent requests may run concurrently; aggregation is a deterministic fold in
agent-id order, so results are independent of completion order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .backends import ChatBackend, ChatRequest
from .errors import BackendError, ConfigurationError, OrchestrationError, ReplyParseError
from .ingest import parse_agent_output
from .model import Document, EventKey, EventMention, TriggerId, canonical_key

__all__ = [
    "AgentConfig",
    "VoteLedger",
    "default_agents",
    "run_self_moa",
    "cleanup_predictions",
]


@dataclass(frozen=True)
class AgentConfig:
    agent_id: int
    temperature: float = 0.9
    max_output_tokens: int = 4096

    def __post_init__(self):
        if self.agent_id < 1:
            raise ConfigurationError("agent ids start at 1")
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ConfigurationError("max_output_tokens must be positive")


def default_agents(n: int, temperature: float = 0.9, max_output_tokens: int = 4096) -> list[AgentConfig]:
    return [AgentConfig(i, temperature, max_output_tokens) for i in range(1, n + 1)]


class VoteLedger:
    """Which agents produced which event predictions.

    Keys are whole-event identities (EventKey). Trigger- and argument-level
    vote sets are derived by unioning agent sets over every key that shares
    the trigger triple (and, for arguments, contains the argument key).
    """

    def __init__(self):
        self._votes: dict[EventKey, set[int]] = {}

    def record(self, key: EventKey, agent_id: int) -> None:
        if agent_id < 1:
            raise ValueError("agent ids start at 1")
        self._votes.setdefault(key, set()).add(agent_id)

    def votes(self, key: EventKey) -> frozenset[int]:
        try:
            return frozenset(self._votes[key])
        except KeyError:
            raise KeyError(f"event key {key} was never voted for")

    def vote_count(self, key: EventKey) -> int:
        return len(self.votes(key))

    def trigger_votes(self, trig: TriggerId) -> frozenset[int]:
        voters: set[int] = set()
        for key, agents in self._votes.items():
            if key.trigger_id == trig:
                voters.update(agents)
        return frozenset(voters)

    def argument_votes(self, trig: TriggerId, arg_key: tuple[int, int, str]) -> frozenset[int]:
        voters: set[int] = set()
        for key, agents in self._votes.items():
            if key.trigger_id == trig and arg_key in key.argument_keys:
                voters.update(agents)
        return frozenset(voters)

    def keys(self):
        return self._votes.keys()

    def __contains__(self, key: EventKey) -> bool:
        return key in self._votes

    def __len__(self) -> int:
        return len(self._votes)


def _validate_agents(agents: list[AgentConfig]) -> None:
    ids = sorted(a.agent_id for a in agents)
    if not ids or ids != list(range(1, len(ids) + 1)):
        raise ConfigurationError(
            f"agent ids must be distinct and contiguous from 1, got {ids}"
        )


def run_self_moa(
    doc: Document,
    prompt: str,
    agents: list[AgentConfig],
    backend: ChatBackend,
    parallelism: int = 4,
) -> tuple[list[EventMention], VoteLedger]:
    """Query every agent with ``prompt`` and aggregate the parsed replies.

    Returns the deduplicated union of grounded events (first-seen order,
    folding agents in id order) and the vote ledger. A reply that fails to
    parse is retried once; on the second failure that agent contributes the
    empty set. A transport failure raises OrchestrationError naming the
    agent - never a partial silent result.
    """
    _validate_agents(agents)

    def one_agent(agent: AgentConfig) -> list[EventMention]:
        request = ChatRequest.user(
            prompt,
            temperature=agent.temperature,
            max_output_tokens=agent.max_output_tokens,
            metadata={"doc_id": doc.doc_id, "channel": f"agent:{agent.agent_id}"},
        )
        for attempt in (0, 1):
            try:
                return parse_agent_output(backend.complete(request), doc)
            except ReplyParseError:
                if attempt:
                    return []
            except BackendError as exc:
                raise OrchestrationError(f"agent {agent.agent_id}: {exc}") from exc
        return []

    ordered = sorted(agents, key=lambda a: a.agent_id)
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        replies = dict(zip((a.agent_id for a in ordered), pool.map(one_agent, ordered)))

    union: list[EventMention] = []
    ledger = VoteLedger()
    seen: set[EventKey] = set()
    for agent in ordered:
        for event in replies[agent.agent_id]:
            key = canonical_key(event)
            if key not in seen:
                seen.add(key)
                union.append(event)
            ledger.record(key, agent.agent_id)
    return union, ledger


def cleanup_predictions(raw: list[EventMention], doc: Document) -> list[EventMention]:
    """Span-validate and canonically order an aggregated prediction set.

    Drops events whose trigger span does not slice back to its surface
    string, deduplicates on whole-event identity, and sorts by trigger
    position then event type. Idempotent; output order is a pure function
    of the event set.
    """
    seen: set[EventKey] = set()
    valid: list[EventMention] = []
    for event in raw:
        if not doc.contains(event.trigger):
            continue
        key = canonical_key(event)
        if key in seen:
            continue
        seen.add(key)
        valid.append(event)
    valid.sort(
        key=lambda e: (
            e.trigger.start,
            e.trigger.end,
            e.event_type,
            canonical_key(e).argument_keys,
        )
    )
    return valid
