"""History buffer law, prompt assembly, and the agent loop."""

import pytest
from hypothesis import given, strategies as st

from plantbot.backends import (BackendUnavailable, ChatTurn, ScriptRule,
                               ScriptedBackend)
from plantbot.bus import MessageBus, default_routes
from plantbot.clock import SimClock
from plantbot.runtime import Agent, AgentSpec, HistoryBuffer, build_prompt, history_append


def turn(i: int) -> ChatTurn:
    return ChatTurn("user", f"t{i}")


class TestHistoryBuffer:
    def test_eviction_keeps_last_ten(self):
        buf = HistoryBuffer(10)
        for i in range(1, 16):
            history_append(buf, turn(i))
        assert [t.content for t in buf.entries] == [f"t{i}" for i in range(6, 16)]

    def test_capacity_zero_stores_nothing(self):
        buf = HistoryBuffer(0)
        for i in range(5):
            history_append(buf, turn(i))
        assert buf.entries == []

    def test_short_sequence_fully_retained_in_order(self):
        buf = HistoryBuffer(10)
        for i in range(3):
            history_append(buf, turn(i))
        assert [t.content for t in buf.entries] == ["t0", "t1", "t2"]

    @given(st.integers(min_value=0, max_value=12),
           st.lists(st.integers(min_value=0, max_value=10_000), max_size=60))
    def test_buffer_law(self, capacity, items):
        # Oracle: plain list slicing, independent of the buffer's eviction code.
        buf = HistoryBuffer(capacity)
        appended = []
        for i in items:
            history_append(buf, turn(i))
            appended.append(f"t{i}")
            assert len(buf) <= capacity
        expected = appended[-capacity:] if capacity else []
        assert [t.content for t in buf.entries] == expected


class TestBuildPrompt:
    def spec(self, capacity=10) -> AgentSpec:
        return AgentSpec(id="chat", role_prompt="Plantbot is a hybrid system of plant and robot.",
                         output_topic="/plantbot/chat/out", history_capacity=capacity)

    def test_empty_history_two_turns(self):
        req = build_prompt(self.spec(), HistoryBuffer(10), "hello")
        assert [t.role for t in req.turns] == ["system", "user"]
        assert req.turns[-1].content == "hello"

    def test_full_history_order(self):
        buf = HistoryBuffer(10)
        for i in range(10):
            buf.append(turn(i))
        req = build_prompt(self.spec(), buf, "new")
        assert len(req.turns) == 12
        assert req.turns[0].role == "system"
        assert [t.content for t in req.turns[1:11]] == [f"t{i}" for i in range(10)]
        assert req.turns[11].content == "new"

    def test_chat_system_prompt_contains_hybrid_clause(self):
        req = build_prompt(self.spec(), HistoryBuffer(10), "x")
        assert "hybrid system of plant and robot" in req.turns[0].content


class RecordingBackend:
    def __init__(self, reply="ok"):
        self.requests = []
        self.reply = reply

    def complete(self, req):
        self.requests.append(req)
        return self.reply


class FailingBackend:
    def complete(self, req):
        raise BackendUnavailable("down")


def make_agent(backend, capacity=10, coalesce=False, **kw):
    bus = MessageBus(default_routes(), SimClock())
    spec = AgentSpec(id="sensor", role_prompt="speak for the soil",
                     output_topic="/plantbot/sensor/out",
                     subscriptions=["/plantbot/sensor/in"],
                     history_capacity=capacity, coalesce_inbound=coalesce, **kw)
    agent = Agent(spec, bus, backend)
    return bus, agent


class TestAgentLoop:
    def test_inbound_completion_published(self):
        rules = [ScriptRule(5, "*", "condition=dry", "The soil is dry.")]
        bus, agent = make_agent(ScriptedBackend(rules, role="sensor"))
        chat_inbox = bus.inbox("chat")
        bus.send("world", "/plantbot/sensor/in", "moisture=12.0% condition=dry")
        assert agent.step() is True
        env = chat_inbox.pop()
        assert env.payload == "The soil is dry."
        assert env.source == "sensor"
        assert env.topic == "/plantbot/sensor/out"

    def test_history_records_exchange_pairs(self):
        backend = RecordingBackend("reply")
        bus, agent = make_agent(backend)
        bus.send("world", "/plantbot/sensor/in", "r1")
        agent.step()
        assert [(t.role, t.content) for t in agent.history.entries] == [
            ("user", "r1"), ("assistant", "reply")]

    def test_stateless_vision_forgets_previous_observation(self):
        backend = RecordingBackend()
        bus, agent = make_agent(backend, capacity=0)
        bus.send("world", "/plantbot/sensor/in", "first observation")
        agent.step()
        bus.send("world", "/plantbot/sensor/in", "second observation")
        agent.step()
        second = backend.requests[1]
        assert len(second.turns) == 2  # system + user only
        assert all("first observation" not in t.content for t in second.turns)

    def test_backend_failure_publishes_nothing(self):
        errors = []
        bus = MessageBus(default_routes(), SimClock())
        spec = AgentSpec(id="sensor", role_prompt="p",
                         output_topic="/plantbot/sensor/out",
                         subscriptions=["/plantbot/sensor/in"])
        agent = Agent(spec, bus, FailingBackend(),
                      on_error=lambda a, m: errors.append((a, m)))
        chat_inbox = bus.inbox("chat")
        for i in range(4):
            bus.send("world", "/plantbot/sensor/in", f"r{i}")
            agent.step()
        assert chat_inbox.pop() is None
        assert agent.failures == 4
        assert len(errors) == 4
        assert agent.history.entries == []  # failed exchanges leave no trace

    def test_coalesce_prompts_only_newest(self):
        backend = RecordingBackend()
        bus, agent = make_agent(backend, coalesce=True)
        for i in range(3):
            bus.send("world", "/plantbot/sensor/in", f"r{i}")
        agent.step()
        assert len(backend.requests) == 1
        assert backend.requests[0].turns[-1].content == "r2"

    def test_inbox_bounded_at_sixteen(self):
        backend = RecordingBackend()
        bus, agent = make_agent(backend)
        for i in range(20):
            bus.send("world", "/plantbot/sensor/in", f"r{i}")
        assert len(agent.inbox) == 16
        assert agent.inbox.dropped == 4

    def test_replay_determinism(self):
        def outputs():
            rules = [ScriptRule(5, "*", "dry", "The soil is dry.", once=True),
                     ScriptRule(1, "*", "dry", "Still dry.")]
            bus, agent = make_agent(ScriptedBackend(rules, role="sensor"))
            chat_inbox = bus.inbox("chat")
            published = []
            for text in ("dry", "dry", "wet", "dry"):
                bus.send("world", "/plantbot/sensor/in", text)
                agent.step()
                env = chat_inbox.pop()
                published.append(env.payload if env else None)
            return published
        first, second = outputs(), outputs()
        assert first == second
        assert first[0] == "The soil is dry."

    def test_context_only_source_extends_history_without_completion(self):
        backend = RecordingBackend()
        bus = MessageBus(default_routes(), SimClock())
        spec = AgentSpec(id="action2", role_prompt="motors",
                         output_topic="/plantbot/action2/out",
                         subscriptions=["/plantbot/chat/out", "/plantbot/action1/out"],
                         context_only_sources=frozenset({"chat"}))
        agent = Agent(spec, bus, backend)
        bus.send("chat", "/plantbot/chat/out", "context text")
        assert agent.step() is False
        assert backend.requests == []
        assert agent.history.entries[0].content == "[chat] context text" or \
            agent.history.entries[0].content == "context text"
        bus.send("action1", "/plantbot/action1/out", "[1] go")
        assert agent.step() is True
        turns = backend.requests[0].turns
        assert any("context text" in t.content for t in turns)


def test_tick_reprompts_latest_input():
    backend = RecordingBackend()
    bus = MessageBus(default_routes(), SimClock())
    spec = AgentSpec(id="sensor", role_prompt="p",
                     output_topic="/plantbot/sensor/out",
                     subscriptions=["/plantbot/sensor/in"],
                     tick_interval_s=2.0)
    agent = Agent(spec, bus, backend)
    assert agent.step() is False  # nothing seen yet: ticks have no material
    bus.send("world", "/plantbot/sensor/in", "reading")
    assert agent.step() is True
    assert agent.step() is False  # interval not yet elapsed
    bus.clock.advance(2.5)
    assert agent.step() is True   # periodic re-prompt with the last input
    assert backend.requests[1].turns[-1].content == "reading"
