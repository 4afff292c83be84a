"""Routing, ordering, bounded queues, and the OSC bridge."""

import pytest

from plantbot.bus import (BusError, Envelope, MessageBus, RouteTable,
                          bridge_osc, default_routes, topic_matches)
from plantbot.clock import SimClock
from plantbot.osc import Endpoint, EndpointConfig, OscMessage, encode_message

from conftest import free_port

NAMESPACE_TOPICS = [
    "/plantbot/sensor/in", "/plantbot/sensor/out",
    "/plantbot/vision/in", "/plantbot/vision/out",
    "/plantbot/human/in", "/plantbot/chat/out",
    "/plantbot/action1/out", "/plantbot/action2/out",
]


def make_bus(**kw) -> MessageBus:
    return MessageBus(default_routes(), SimClock(), **kw)


class TestRouteTable:
    def test_default_contains_core_topology(self):
        assert default_routes().missing_core_edges() == []

    def test_missing_edge_reported(self):
        table = default_routes()
        table.remove("/plantbot/chat/out", "action1")
        assert ("/plantbot/chat/out", "action1") in table.missing_core_edges()

    def test_bad_pattern_rejected(self):
        with pytest.raises(BusError):
            RouteTable([("/other/x/out", "a")])

    def test_wildcard_matches_enumerated(self):
        # Enumerated against the namespace list by hand.
        matches = [t for t in NAMESPACE_TOPICS if topic_matches("/plantbot/*/out", t)]
        assert matches == ["/plantbot/sensor/out", "/plantbot/vision/out",
                           "/plantbot/chat/out", "/plantbot/action1/out",
                           "/plantbot/action2/out"]


class TestPublish:
    def test_sensor_out_reaches_chat_only(self):
        bus = make_bus()
        count = bus.send("sensor", "/plantbot/sensor/out", "The soil is dry.")
        assert count == 1
        env = bus.inbox("chat").pop()
        assert env.payload == "The soil is dry."
        assert env.source == "sensor"

    def test_unrouted_topic_delivers_zero(self):
        bus = make_bus()
        assert bus.send("ghost", "/plantbot/ghost/out", "hello") == 0

    def test_invalid_namespace_rejected(self):
        bus = make_bus()
        with pytest.raises(BusError):
            bus.publish(Envelope(1, 0, "x", "/other/thing", "p"))

    def test_seq_order_preserved_per_source(self):
        bus = make_bus()
        for text in ("one", "two", "three"):
            bus.send("sensor", "/plantbot/sensor/out", text)
        inbox = bus.inbox("chat")
        received = [inbox.pop() for _ in range(3)]
        assert [e.payload for e in received] == ["one", "two", "three"]
        assert [e.seq for e in received] == sorted(e.seq for e in received)

    def test_chat_fanout_reaches_three(self):
        bus = make_bus()
        assert bus.send("chat", "/plantbot/chat/out", "hi") == 3  # speaker, action1, action2

    def test_publish_validates_envelope(self):
        bus = make_bus()
        with pytest.raises(BusError):
            bus.publish(Envelope(-1, 0, "s", "/plantbot/sensor/out", "p"))


class TestSubscribe:
    def test_subscribe_then_receive(self):
        bus = make_bus()
        inbox = bus.subscribe("observer", "/plantbot/sensor/out")
        bus.send("sensor", "/plantbot/sensor/out", "ping")
        assert inbox.pop().payload == "ping"

    def test_duplicate_subscription_is_idempotent(self):
        bus = make_bus()
        inbox = bus.subscribe("observer", "/plantbot/sensor/out")
        bus.subscribe("observer", "/plantbot/sensor/out")
        bus.send("sensor", "/plantbot/sensor/out", "once")
        assert inbox.pop().payload == "once"
        assert inbox.pop() is None

    def test_unsubscribe_stops_delivery(self):
        bus = make_bus()
        inbox = bus.subscribe("observer", "/plantbot/sensor/out")
        assert bus.unsubscribe("observer", "/plantbot/sensor/out")
        bus.send("sensor", "/plantbot/sensor/out", "gone")
        assert inbox.pop() is None

    def test_wildcard_subscription(self):
        bus = make_bus()
        inbox = bus.subscribe("observer", "/plantbot/*/out")
        bus.send("sensor", "/plantbot/sensor/out", "a")
        bus.send("vision", "/plantbot/vision/out", "b")
        got = [inbox.pop().source for _ in range(2)]
        assert got == ["sensor", "vision"]


class TestBoundedQueues:
    def test_drop_oldest_and_counter(self):
        bus = make_bus()
        inbox = bus.subscribe("slow", "/plantbot/sensor/out", bound=3)
        for i in range(5):
            bus.send("sensor", "/plantbot/sensor/out", f"m{i}")
        assert inbox.dropped == 2
        kept = [inbox.pop().payload for _ in range(3)]
        assert kept == ["m2", "m3", "m4"]
        assert bus.drop_counts == {"slow": 2}


class TestBridge:
    def test_outbound_payload_becomes_single_string_arg(self):
        port_rx = free_port()
        bus = make_bus()
        with Endpoint(EndpointConfig("127.0.0.1", free_port(),
                                     [("127.0.0.1", port_rx)])) as out_ep, \
             Endpoint(EndpointConfig("127.0.0.1", port_rx)) as rx:
            bridge_osc(bus, out_ep, direction="out")
            bus.send("sensor", "/plantbot/sensor/out", "The soil is dry.")
            msg = rx.recv(timeout=2.0)
            assert msg == OscMessage("/plantbot/sensor/out", ("The soil is dry.",))

    def test_inbound_osc_becomes_envelope(self):
        port_in = free_port()
        bus = make_bus()
        with Endpoint(EndpointConfig("127.0.0.1", port_in)) as in_ep, \
             Endpoint(EndpointConfig("127.0.0.1", free_port(),
                                     [("127.0.0.1", port_in)])) as tx:
            bridge = bridge_osc(bus, in_ep, direction="in")
            tx.send(OscMessage("/plantbot/human/in", ("hello",)))
            for _ in range(50):
                if bridge.pump():
                    break
            env = bus.inbox("chat").pop()
            assert env is not None
            assert env.topic == "/plantbot/human/in"
            assert env.source == "human"
            assert env.payload == "hello"

    def test_round_trip_preserves_utf8(self):
        port_in = free_port()
        bus_a = make_bus()
        bus_b = make_bus()
        payload = "水をください \U0001f331"
        with Endpoint(EndpointConfig("127.0.0.1", free_port(),
                                     [("127.0.0.1", port_in)])) as out_ep, \
             Endpoint(EndpointConfig("127.0.0.1", port_in)) as in_ep:
            bridge_osc(bus_a, out_ep, direction="out")
            bridge_b = bridge_osc(bus_b, in_ep, direction="in")
            bus_a.send("human", "/plantbot/human/in", payload)
            for _ in range(50):
                if bridge_b.pump():
                    break
            env = bus_b.inbox("chat").pop()
            assert env.payload == payload

    def test_malformed_ingress_counted_not_fatal(self):
        import socket as socket_mod
        port_in = free_port()
        bus = make_bus()
        with Endpoint(EndpointConfig("127.0.0.1", port_in)) as in_ep:
            bridge = bridge_osc(bus, in_ep, direction="in")
            raw = socket_mod.socket(socket_mod.AF_INET, socket_mod.SOCK_DGRAM)
            raw.sendto(b"junk!", ("127.0.0.1", port_in))
            raw.sendto(encode_message(OscMessage("/plantbot/human/in", ("ok",))),
                       ("127.0.0.1", port_in))
            raw.close()
            for _ in range(50):
                bridge.pump()
                if bus.inbox("chat").__len__():
                    break
            assert in_ep.malformed_count == 1
            assert bus.inbox("chat").pop().payload == "ok"


def test_tap_sees_every_publication():
    bus = make_bus()
    seen = []
    bus.add_tap(lambda env: seen.append(env.topic))
    bus.send("sensor", "/plantbot/sensor/out", "x")
    bus.send("ghost", "/plantbot/ghost/out", "y")  # zero subscribers, still tapped
    assert seen == ["/plantbot/sensor/out", "/plantbot/ghost/out"]
