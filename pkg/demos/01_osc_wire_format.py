"""Walk through the OSC wire format the agents talk over.

Every message is an address pattern plus typed arguments, padded to 4-byte
boundaries. Natural-language traffic uses a single UTF-8 string argument.
"""

from plantbot import OscMessage, decode_message, encode_message
from plantbot.osc import Endpoint, EndpointConfig

from _util import free_port


def hexdump(data: bytes) -> str:
    rows = []
    for offset in range(0, len(data), 8):
        chunk = data[offset:offset + 8]
        hexpart = " ".join(f"{b:02x}" for b in chunk)
        text = "".join(chr(b) if 32 <= b < 127 else "." for b in chunk)
        rows.append(f"  {offset:04d}  {hexpart:<23}  {text}")
    return "\n".join(rows)


# The smallest message: an address and no arguments. The address pads to 8
# bytes, the type-tag string "," pads to 4 -> 12 bytes total.
ping = OscMessage("/ping", ())
wire = encode_message(ping)
print(f"encode {ping.address!r} -> {len(wire)} bytes")
print(hexdump(wire))

# A sensor report with one string argument.
report = OscMessage("/plantbot/sensor", ("dry",))
wire = encode_message(report)
print(f"\nencode {report.address!r} + {report.args} -> {len(wire)} bytes")
print(hexdump(wire))

# Round trip: decoding and re-encoding reproduces the bytes exactly.
assert decode_message(wire) == report
assert encode_message(decode_message(wire)) == wire
print("\nround trip is byte-exact")

# Multi-byte UTF-8 survives: the original deployment spoke Japanese.
utter = OscMessage("/plantbot/chat/out", ("水をください",))
assert decode_message(encode_message(utter)) == utter
print(f"UTF-8 payload {utter.args[0]!r} survives the wire")

# Datagrams over loopback UDP.
port = free_port()
with Endpoint(EndpointConfig("127.0.0.1", free_port(), [("127.0.0.1", port)])) as tx, \
     Endpoint(EndpointConfig("127.0.0.1", port)) as rx:
    tx.send(OscMessage("/plantbot/sensor/out", ("The soil is dry.",)))
    received = rx.recv(timeout=2.0)
    print(f"\nUDP loopback delivered: {received.address} {received.args}")
