"""Agent chassis: subscription-driven loops over a bounded conversation memory.

An agent owns a history buffer, a backend, and one output topic. Each step
takes one inbound envelope (or a periodic tick), assembles a prompt of
[system role prompt] + history + [new user turn], obtains a completion,
records the exchange in history, and publishes the (optionally
postprocessed) response. Backend failures are logged and isolated; they
never crash the loop and never publish.

Agents share nothing but the bus. The default scheduler steps each agent
cooperatively, which keeps scripted runs bit-for-bit reproducible; an agent
moved to its own process communicates through the OSC bridge instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from .backends import BackendUnavailable, ChatTurn, CompletionRequest
from .bus import Envelope, MessageBus

log = logging.getLogger(__name__)

AGENT_INBOX_BOUND = 16


@dataclass
class AgentSpec:
    """Static description of one role agent."""

    id: str
    role_prompt: str
    output_topic: str
    subscriptions: list[str] = field(default_factory=list)
    history_capacity: int = 10
    tick_interval_s: float | None = None
    postprocessor: str | None = None
    model: str = "scripted"
    temperature: float = 0.0
    max_tokens: int = 256
    coalesce_inbound: bool = False
    context_only_sources: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.history_capacity < 0:
            raise ValueError("history capacity must be >= 0")


class HistoryBuffer:
    """Bounded turn memory; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self.entries: list[ChatTurn] = []

    def append(self, turn: ChatTurn) -> "HistoryBuffer":
        self.entries.append(turn)
        if len(self.entries) > self.capacity:
            del self.entries[: len(self.entries) - self.capacity]
        return self

    def __len__(self) -> int:
        return len(self.entries)


def history_append(buf: HistoryBuffer, turn: ChatTurn) -> HistoryBuffer:
    return buf.append(turn)


def build_prompt(spec: AgentSpec, buf: HistoryBuffer, new_input: str) -> CompletionRequest:
    """[system] + history in order + [user new_input]."""
    turns = [ChatTurn("system", spec.role_prompt)]
    turns.extend(buf.entries)
    turns.append(ChatTurn("user", new_input))
    return CompletionRequest(
        model=spec.model,
        turns=turns,
        max_tokens=spec.max_tokens,
        temperature=spec.temperature,
    )


class Agent:
    """One running role agent; drive it by calling ``step()``.

    ``input_formatter`` maps an inbound envelope to the user-turn text
    (default: the raw payload). ``postprocess`` maps the completion to the
    published payload; returning None suppresses publication (used by the
    action stack). Envelopes from ``context_only_sources`` are appended to
    history without triggering a completion.
    """

    def __init__(self, spec: AgentSpec, bus: MessageBus, backend,
                 input_formatter: Callable[[Envelope], str] | None = None,
                 postprocess: Callable[[str], str | None] | None = None,
                 on_error: Callable[[str, str], None] | None = None):
        self.spec = spec
        self.bus = bus
        self.backend = backend
        self.history = HistoryBuffer(spec.history_capacity)
        self.input_formatter = input_formatter or (lambda env: env.payload)
        self.postprocess = postprocess
        self.on_error = on_error
        self.failures = 0
        self.completions = 0
        self._last_input: str | None = None
        self._last_fire_s: float | None = None
        self.inbox = bus.inbox(spec.id, bound=AGENT_INBOX_BOUND)
        for pattern in spec.subscriptions:
            bus.subscribe(spec.id, pattern, bound=AGENT_INBOX_BOUND)

    def _next_input(self) -> str | None:
        if self.spec.coalesce_inbound:
            pending = self.inbox.drain()
            usable = [e for e in pending if e.source not in self.spec.context_only_sources]
            for env in pending:
                if env.source in self.spec.context_only_sources:
                    self._absorb_context(env)
            if usable:
                # Freshness over completeness: only the newest reading is prompted.
                return self.input_formatter(usable[-1])
            return None
        while True:
            env = self.inbox.pop()
            if env is None:
                return None
            if env.source in self.spec.context_only_sources:
                self._absorb_context(env)
                continue
            return self.input_formatter(env)

    def _absorb_context(self, env: Envelope) -> None:
        text = self.input_formatter(env)
        if text:
            self.history.append(ChatTurn("user", text))

    def step(self) -> bool:
        """Process at most one input; returns True if a completion ran."""
        text = self._next_input()
        if text is None and self._tick_due():
            text = self._last_input
        if text is None:
            return False
        self._last_input = text
        self._last_fire_s = self.bus.clock.now_s
        req = build_prompt(self.spec, self.history, text)
        try:
            response = self.backend.complete(req)
        except BackendUnavailable as e:
            self.failures += 1
            log.warning("agent %s backend failed: %s", self.spec.id, e)
            if self.on_error:
                self.on_error(self.spec.id, str(e))
            return False
        self.completions += 1
        self.history.append(ChatTurn("user", text))
        self.history.append(ChatTurn("assistant", response))
        out = self.postprocess(response) if self.postprocess else response
        if out is not None:
            self.bus.send(self.spec.id, self.spec.output_topic, out)
        return True

    def _tick_due(self) -> bool:
        if self.spec.tick_interval_s is None or self._last_input is None:
            return False
        if self._last_fire_s is None:
            return True
        return self.bus.clock.now_s - self._last_fire_s >= self.spec.tick_interval_s


def run_agent(spec: AgentSpec, bus: MessageBus, backend, **kwargs) -> Agent:
    return Agent(spec, bus, backend, **kwargs)
