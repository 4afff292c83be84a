"""OSC 1.0 codec and UDP endpoints.

Every inter-agent message in this system travels as a single OSC message:
an address pattern naming the topic plus (usually) one UTF-8 string
argument carrying natural-language text. Only the four core argument
types are supported (int32, float32, string, blob); bundles are rejected.

Layout rules: the address and the type-tag string are null-terminated and
padded to 4-byte boundaries, int32/float32 are big-endian, blobs carry an
int32 size prefix and are padded to 4 bytes. Encoded messages are always
a multiple of 4 bytes long.
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1

OscArg = "int | float | str | bytes"


class OscError(Exception):
    """Base class for codec and endpoint failures."""


class OscEncodeError(OscError):
    """Message violates an encoding invariant; names the offending field."""


class OscDecodeError(OscError):
    """Byte sequence is not a well-formed OSC message.

    ``kind`` discriminates the failure: "truncated packet",
    "truncated argument", "missing type tag", "unknown type tag",
    "bad padding", "bad address", "bad string", "bad blob",
    "bundle unsupported", "trailing bytes".
    """

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        super().__init__(f"{kind}: {detail}" if detail else kind)


@dataclass(frozen=True)
class OscMessage:
    """An address pattern plus an ordered list of typed arguments."""

    address: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


def float32(x: float) -> float:
    """Round a float to the nearest IEEE 754 single-precision value.

    Float arguments travel as float32 on the wire; pre-rounding with this
    helper makes decode(encode(m)) == m hold exactly.
    """
    return struct.unpack(">f", struct.pack(">f", x))[0]


def _validate_address(address: str) -> None:
    if not address or not address.startswith("/"):
        raise OscEncodeError(f"address must start with '/': {address!r}")
    if "\x00" in address:
        raise OscEncodeError("address contains a null byte")
    if any(c.isspace() for c in address):
        raise OscEncodeError(f"address contains whitespace: {address!r}")


def _pad4(data: bytes) -> bytes:
    rem = len(data) % 4
    return data if rem == 0 else data + b"\x00" * (4 - rem)


def _encode_string(s: str, what: str) -> bytes:
    if "\x00" in s:
        raise OscEncodeError(f"{what} contains a null byte")
    return _pad4(s.encode("utf-8") + b"\x00")


def encode_message(msg: OscMessage) -> bytes:
    """Serialize a message to wire bytes (length always a multiple of 4)."""
    _validate_address(msg.address)
    parts = [_encode_string(msg.address, "address")]
    tags = [","]
    body: list[bytes] = []
    for i, arg in enumerate(msg.args):
        where = f"args[{i}]"
        if isinstance(arg, bool):
            raise OscEncodeError(f"{where}: bool is not an OSC type")
        if isinstance(arg, int):
            if not INT32_MIN <= arg <= INT32_MAX:
                raise OscEncodeError(f"{where}: {arg} out of int32 range")
            tags.append("i")
            body.append(struct.pack(">i", arg))
        elif isinstance(arg, float):
            tags.append("f")
            body.append(struct.pack(">f", arg))
        elif isinstance(arg, str):
            tags.append("s")
            body.append(_encode_string(arg, where))
        elif isinstance(arg, (bytes, bytearray)):
            blob = bytes(arg)
            tags.append("b")
            body.append(struct.pack(">i", len(blob)) + _pad4(blob))
        else:
            raise OscEncodeError(f"{where}: unsupported type {type(arg).__name__}")
    parts.append(_encode_string("".join(tags), "type tags"))
    parts.extend(body)
    return b"".join(parts)


def _read_string(data: bytes, offset: int, what: str) -> tuple[str, int]:
    end = data.find(b"\x00", offset)
    if end < 0:
        raise OscDecodeError("truncated argument", f"unterminated {what}")
    raw = data[offset:end]
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise OscDecodeError("bad string", f"{what}: {e}") from None
    new_offset = end + 1
    rem = new_offset % 4
    if rem:
        pad = data[new_offset : new_offset + (4 - rem)]
        if len(pad) < 4 - rem:
            raise OscDecodeError("truncated argument", f"padding after {what}")
        if pad != b"\x00" * (4 - rem):
            raise OscDecodeError("bad padding", f"non-null padding after {what}")
        new_offset += 4 - rem
    return text, new_offset


def decode_message(data: bytes) -> OscMessage:
    """Parse wire bytes into an OscMessage.

    Total over arbitrary input: any malformed byte sequence raises
    OscDecodeError (never any other exception type).
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise OscDecodeError("bad address", "input is not a byte sequence")
    data = bytes(data)
    if len(data) == 0:
        raise OscDecodeError("truncated packet", "empty datagram")
    if data.startswith(b"#bundle"):
        raise OscDecodeError("bundle unsupported", "OSC bundles are not accepted")
    if len(data) < 4 or len(data) % 4 != 0:
        raise OscDecodeError("truncated packet", f"length {len(data)} not a multiple of 4")

    address, offset = _read_string(data, 0, "address")
    if not address.startswith("/") or any(c.isspace() for c in address):
        raise OscDecodeError("bad address", repr(address))
    if offset >= len(data):
        raise OscDecodeError("missing type tag", "no type-tag string")
    tag_string, offset = _read_string(data, offset, "type tags")
    if not tag_string.startswith(","):
        raise OscDecodeError("missing type tag", f"tag string {tag_string!r} lacks ',' prefix")

    args: list = []
    for tag in tag_string[1:]:
        if tag == "i":
            if offset + 4 > len(data):
                raise OscDecodeError("truncated argument", "int32 needs 4 bytes")
            args.append(struct.unpack_from(">i", data, offset)[0])
            offset += 4
        elif tag == "f":
            if offset + 4 > len(data):
                raise OscDecodeError("truncated argument", "float32 needs 4 bytes")
            args.append(struct.unpack_from(">f", data, offset)[0])
            offset += 4
        elif tag == "s":
            value, offset = _read_string(data, offset, "string argument")
            args.append(value)
        elif tag == "b":
            if offset + 4 > len(data):
                raise OscDecodeError("truncated argument", "blob size needs 4 bytes")
            size = struct.unpack_from(">i", data, offset)[0]
            offset += 4
            if size < 0:
                raise OscDecodeError("bad blob", f"negative size {size}")
            padded = size + (-size % 4)
            if offset + padded > len(data):
                raise OscDecodeError("truncated argument", "blob body")
            blob = data[offset : offset + size]
            pad = data[offset + size : offset + padded]
            if pad != b"\x00" * len(pad):
                raise OscDecodeError("bad padding", "non-null blob padding")
            args.append(blob)
            offset += padded
        else:
            raise OscDecodeError("unknown type tag", repr(tag))
    if offset != len(data):
        raise OscDecodeError("trailing bytes", f"{len(data) - offset} bytes after arguments")
    return OscMessage(address, tuple(args))


@dataclass
class EndpointConfig:
    """Bind address plus the default peer set for outbound datagrams."""

    bind_host: str = "127.0.0.1"
    bind_port: int = 1024
    peers: list[tuple[str, int]] = field(default_factory=list)

    def validate(self) -> None:
        if not 1 <= self.bind_port <= 65535:
            raise ValueError(f"bind_port {self.bind_port} outside 1-65535")
        for host, port in self.peers:
            if not 1 <= port <= 65535:
                raise ValueError(f"peer port {port} outside 1-65535")
            if not host:
                raise ValueError("peer host is empty")


class Endpoint:
    """A bound UDP socket that sends and receives OSC messages.

    ``send`` may be called from any thread; ``recv``/``stream`` form a
    single-consumer receive side. Malformed datagrams are dropped and
    counted, never raised.
    """

    def __init__(self, cfg: EndpointConfig):
        cfg.validate()
        self.cfg = cfg
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._sock.bind((cfg.bind_host, cfg.bind_port))
        except OSError as e:
            self._sock.close()
            raise OscError(f"cannot bind {cfg.bind_host}:{cfg.bind_port}: {e}") from e
        self._lock = threading.Lock()
        self._closed = False
        self.malformed_count = 0
        self.send_errors = 0

    @property
    def bound_address(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def send(self, msg: OscMessage, peer: tuple[str, int] | None = None) -> int:
        """Encode ``msg`` into one datagram per peer; returns datagrams sent.

        Unreachable peers are logged and counted, not fatal.
        """
        data = encode_message(msg)
        peers = [peer] if peer is not None else self.cfg.peers
        sent = 0
        for target in peers:
            try:
                self._sock.sendto(data, target)
                sent += 1
            except OSError as e:
                with self._lock:
                    self.send_errors += 1
                log.warning("send to %s failed: %s", target, e)
        return sent

    def recv(self, timeout: float | None = 0.0) -> OscMessage | None:
        """Return the next well-formed message, or None on timeout.

        Malformed datagrams are skipped (counted in ``malformed_count``)
        without consuming the timeout budget restart.
        """
        while True:
            self._sock.settimeout(timeout)
            try:
                data, _addr = self._sock.recvfrom(65536)
            except (socket.timeout, BlockingIOError):
                # timeout=0 puts the socket in non-blocking mode, which
                # surfaces "no data" as BlockingIOError instead.
                return None
            except OSError:
                if self._closed:
                    return None
                raise
            try:
                return decode_message(data)
            except OscDecodeError as e:
                with self._lock:
                    self.malformed_count += 1
                log.debug("dropped malformed datagram: %s", e)

    def stream(self, timeout: float | None = 0.0):
        """Yield messages until a timeout or close. Single consumer."""
        while True:
            msg = self.recv(timeout)
            if msg is None:
                return
            yield msg

    def close(self) -> None:
        self._closed = True
        self._sock.close()

    def __enter__(self) -> "Endpoint":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_endpoint(cfg: EndpointConfig) -> Endpoint:
    return Endpoint(cfg)
