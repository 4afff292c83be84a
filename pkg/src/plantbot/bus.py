"""Topic-based publish/subscribe router with optional OSC egress/ingress.

Topics live in a fixed namespace, ``/plantbot/<agent>/<in|out>``. The route
table holds (topic pattern -> subscriber id) edges; a ``*`` segment matches
exactly one path segment. Each subscriber owns one bounded inbox; overflow
drops the oldest entry and increments a counter, so slow consumers see the
freshest traffic rather than stalling fast producers.

The default topology routes sensor, vision, and human traffic into the chat
agent, fans chat output to the speaker and both action agents, chains
action1 into action2, and delivers action traffic to the world driver.
In-process delivery is lossless and ordered per (source, subscriber);
``bridge_osc`` extends the same traffic over UDP datagrams for agents
hosted in other processes.
"""

from __future__ import annotations

import logging
import re
import threading
from collections import deque
from dataclasses import dataclass, field

from .clock import SimClock
from .osc import Endpoint, OscMessage

log = logging.getLogger(__name__)

TOPIC_RE = re.compile(r"^/plantbot/[a-z0-9_]+/(in|out)$")
PATTERN_RE = re.compile(r"^/plantbot/(\*|[a-z0-9_]+)/(\*|in|out)$")

DEFAULT_QUEUE_BOUND = 256

# Core topology: every deployment must route at least these edges.
CORE_EDGES: tuple[tuple[str, str], ...] = (
    ("/plantbot/sensor/out", "chat"),
    ("/plantbot/vision/out", "chat"),
    ("/plantbot/human/in", "chat"),
    ("/plantbot/chat/out", "speaker"),
    ("/plantbot/chat/out", "action1"),
    ("/plantbot/chat/out", "action2"),
    ("/plantbot/action1/out", "action2"),
    ("/plantbot/action2/out", "world"),
)

# Feeds and taps the full system uses on top of the core edges.
EXTRA_EDGES: tuple[tuple[str, str], ...] = (
    ("/plantbot/sensor/in", "sensor"),
    ("/plantbot/vision/in", "vision"),
    ("/plantbot/action1/out", "world"),
)


class BusError(Exception):
    pass


@dataclass(frozen=True)
class Envelope:
    """One natural-language message in flight between agents."""

    seq: int
    timestamp_ms: int
    source: str
    topic: str
    payload: str

    def validate(self) -> None:
        if self.seq < 0:
            raise BusError(f"negative seq {self.seq}")
        if not self.source:
            raise BusError("empty source")
        if not TOPIC_RE.match(self.topic):
            raise BusError(f"topic {self.topic!r} outside /plantbot/<agent>/<in|out>")
        if not isinstance(self.payload, str):
            raise BusError("payload must be text")


def topic_matches(pattern: str, topic: str) -> bool:
    """Segment-wise match; '*' matches exactly one segment."""
    p_parts = pattern.split("/")
    t_parts = topic.split("/")
    if len(p_parts) != len(t_parts):
        return False
    return all(p == "*" or p == t for p, t in zip(p_parts, t_parts))


class RouteTable:
    """Ordered set of (topic pattern -> subscriber id) edges."""

    def __init__(self, edges: list[tuple[str, str]] | None = None):
        self.edges: list[tuple[str, str]] = []
        for pattern, sub in edges or []:
            self.add(pattern, sub)

    def add(self, pattern: str, subscriber: str) -> bool:
        """Add an edge; returns False if it was already present."""
        if not PATTERN_RE.match(pattern):
            raise BusError(f"bad topic pattern {pattern!r}")
        if (pattern, subscriber) in self.edges:
            return False
        self.edges.append((pattern, subscriber))
        return True

    def remove(self, pattern: str, subscriber: str) -> bool:
        try:
            self.edges.remove((pattern, subscriber))
            return True
        except ValueError:
            return False

    def subscribers_for(self, topic: str) -> list[str]:
        seen: list[str] = []
        for pattern, sub in self.edges:
            if topic_matches(pattern, topic) and sub not in seen:
                seen.append(sub)
        return seen

    def missing_core_edges(self) -> list[tuple[str, str]]:
        return [e for e in CORE_EDGES if e not in self.edges]


def default_routes() -> RouteTable:
    return RouteTable(list(CORE_EDGES) + list(EXTRA_EDGES))


class Inbox:
    """Bounded single-consumer queue of envelopes (drop-oldest)."""

    def __init__(self, agent_id: str, bound: int):
        self.agent_id = agent_id
        self.bound = bound
        self._items: deque[Envelope] = deque()
        self._lock = threading.Lock()
        self.dropped = 0

    def put(self, env: Envelope) -> None:
        with self._lock:
            if len(self._items) >= self.bound:
                self._items.popleft()
                self.dropped += 1
            self._items.append(env)

    def pop(self) -> Envelope | None:
        with self._lock:
            return self._items.popleft() if self._items else None

    def drain(self) -> list[Envelope]:
        with self._lock:
            items = list(self._items)
            self._items.clear()
            return items

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        while True:
            env = self.pop()
            if env is None:
                return
            yield env


class MessageBus:
    """Router owning the route table, per-subscriber inboxes, and taps.

    Publish may be called from any thread; each inbox has one consumer.
    Taps observe every accepted publication (used for telemetry).
    """

    def __init__(self, routes: RouteTable | None = None, clock: SimClock | None = None,
                 queue_bound: int = DEFAULT_QUEUE_BOUND):
        self.routes = routes if routes is not None else default_routes()
        self.clock = clock or SimClock()
        self.queue_bound = queue_bound
        self._inboxes: dict[str, Inbox] = {}
        self._seq: dict[str, int] = {}
        self._lock = threading.Lock()
        self._taps: list = []
        self.delivered_pairs: dict[tuple[str, str], int] = {}

    def inbox(self, agent_id: str, bound: int | None = None) -> Inbox:
        with self._lock:
            box = self._inboxes.get(agent_id)
            if box is None:
                box = Inbox(agent_id, bound or self.queue_bound)
                self._inboxes[agent_id] = box
            elif bound is not None:
                box.bound = bound
            return box

    def subscribe(self, agent_id: str, pattern: str, bound: int | None = None) -> Inbox:
        """Register interest; idempotent. Returns the agent's inbox."""
        with self._lock:
            self.routes.add(pattern, agent_id)
        return self.inbox(agent_id, bound)

    def unsubscribe(self, agent_id: str, pattern: str) -> bool:
        with self._lock:
            return self.routes.remove(pattern, agent_id)

    def add_tap(self, fn) -> None:
        self._taps.append(fn)

    def next_seq(self, source: str) -> int:
        with self._lock:
            n = self._seq.get(source, 0) + 1
            self._seq[source] = n
            return n

    def send(self, source: str, topic: str, payload: str) -> int:
        """Build an envelope (seq + timestamp assigned here) and publish it."""
        env = Envelope(self.next_seq(source), self.clock.now_ms, source, topic, payload)
        return self.publish(env)

    def publish(self, env: Envelope) -> int:
        """Deliver to every routed subscriber; returns the delivery count."""
        env.validate()
        with self._lock:
            targets = self.routes.subscribers_for(env.topic)
            boxes = [self._inboxes.get(t) for t in targets]
        count = 0
        for target, box in zip(targets, boxes):
            if box is None:
                box = self.inbox(target)
            box.put(env)
            self.delivered_pairs[(env.source, target)] = (
                self.delivered_pairs.get((env.source, target), 0) + 1
            )
            count += 1
        for tap in self._taps:
            tap(env)
        return count

    @property
    def drop_counts(self) -> dict[str, int]:
        return {aid: box.dropped for aid, box in self._inboxes.items() if box.dropped}


class OscBridge:
    """Pumps envelopes out to, and datagrams in from, an OSC endpoint.

    Outbound: every published envelope whose topic matches one of the
    bridge's patterns is encoded as ``OscMessage(topic, [payload])`` and
    sent to the endpoint's peers. Inbound: each datagram is unwrapped and
    republished locally, with the source taken from the topic's agent
    segment. Codec failures are counted, never raised.
    """

    def __init__(self, bus: MessageBus, endpoint: Endpoint, direction: str = "both",
                 patterns: list[str] | None = None):
        if direction not in ("in", "out", "both"):
            raise BusError(f"direction {direction!r} not in in/out/both")
        self.bus = bus
        self.endpoint = endpoint
        self.direction = direction
        self.patterns = patterns or ["/plantbot/*/out", "/plantbot/*/in"]
        self.sent = 0
        self.received = 0
        self.errors = 0
        self._detached = False
        if direction in ("out", "both"):
            bus.add_tap(self._on_publish)

    def _on_publish(self, env: Envelope) -> None:
        if self._detached:
            return
        if not any(topic_matches(p, env.topic) for p in self.patterns):
            return
        try:
            self.endpoint.send(OscMessage(env.topic, (env.payload,)))
            self.sent += 1
        except Exception as e:  # encode failures must never kill a publisher
            self.errors += 1
            log.warning("bridge egress failed for %s: %s", env.topic, e)

    def pump(self, max_messages: int = 64) -> int:
        """Drain pending inbound datagrams onto the bus; returns count."""
        if self.direction == "out":
            return 0
        n = 0
        while n < max_messages:
            msg = self.endpoint.recv(timeout=0.0)
            if msg is None:
                break
            try:
                payload = str(msg.args[0]) if msg.args else ""
                source = msg.address.split("/")[2]
                self.bus.send(source, msg.address, payload)
                self.received += 1
                n += 1
            except (BusError, IndexError) as e:
                self.errors += 1
                log.warning("bridge ingress dropped %s: %s", msg.address, e)
        return n

    def detach(self) -> None:
        self._detached = True


def bridge_osc(bus: MessageBus, endpoint: Endpoint, direction: str = "both",
               patterns: list[str] | None = None) -> OscBridge:
    return OscBridge(bus, endpoint, direction, patterns)
