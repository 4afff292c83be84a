"""Operator console server: one JSON object per message, both directions.

A single TCP endpoint serves two framings. Plain clients (test harnesses,
netcat) send and receive newline-delimited JSON. Browser clients open the
same port with an HTTP WebSocket upgrade; after the RFC 6455 handshake the
identical JSON objects travel one-per-text-frame. Commands flow into a
thread-safe queue the run loop drains each tick; events fan out to every
connected client through bounded per-client buffers, and a client that
falls more than a buffer behind is dropped rather than allowed to stall
the broadcast.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import queue
import socket
import struct
import threading

log = logging.getLogger(__name__)

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
CLIENT_BUFFER = 256


def ws_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(payload: bytes) -> bytes:
    """Server-to-client text frame (FIN set, unmasked)."""
    header = bytearray([0x81])
    n = len(payload)
    if n < 126:
        header.append(n)
    elif n < 65536:
        header.append(126)
        header += struct.pack(">H", n)
    else:
        header.append(127)
        header += struct.pack(">Q", n)
    return bytes(header) + payload


class _WsReader:
    """Incremental parser for masked client frames."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def _read_exact(self, n: int) -> bytes | None:
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                return None
            buf += chunk
        return buf

    def next_text(self) -> str | None:
        """Next text payload; None when the peer closed."""
        while True:
            head = self._read_exact(2)
            if head is None:
                return None
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                ext = self._read_exact(2)
                if ext is None:
                    return None
                length = struct.unpack(">H", ext)[0]
            elif length == 127:
                ext = self._read_exact(8)
                if ext is None:
                    return None
                length = struct.unpack(">Q", ext)[0]
            mask = self._read_exact(4) if masked else b"\x00" * 4
            if mask is None:
                return None
            payload = self._read_exact(length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                try:
                    self.sock.sendall(b"\x88\x00")
                except OSError:
                    pass
                return None
            if opcode == 0x9:  # ping -> pong
                try:
                    self.sock.sendall(b"\x8a" + bytes([len(payload)]) + payload)
                except OSError:
                    pass
                continue
            if opcode in (0x1, 0x0):
                try:
                    return payload.decode("utf-8")
                except UnicodeDecodeError:
                    continue
            # binary and unknown opcodes are ignored


class _Client:
    def __init__(self, sock: socket.socket, addr, websocket: bool):
        self.sock = sock
        self.addr = addr
        self.websocket = websocket
        self.outbox: queue.Queue[bytes] = queue.Queue(maxsize=CLIENT_BUFFER)
        self.alive = True

    def enqueue(self, line: bytes) -> bool:
        try:
            self.outbox.put_nowait(line)
            return True
        except queue.Full:
            return False

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


class ConsoleServer:
    """Accepts console clients and bridges them to the run loop.

    ``commands`` holds decoded command dicts in arrival order; call
    ``broadcast(event)`` from the run loop to fan an event out to every
    client. Thread-per-client; safe to broadcast from one thread while
    clients connect and send concurrently.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.commands: queue.Queue[dict] = queue.Queue()
        self._clients: list[_Client] = []
        self._lock = threading.Lock()
        self._server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._server.bind((host, port))
        self._server.listen(8)
        self._running = True
        self.dropped_clients = 0
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return self._server.getsockname()

    def _accept_loop(self) -> None:
        while self._running:
            try:
                sock, addr = self._server.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(sock, addr),
                             daemon=True).start()

    def _serve_client(self, sock: socket.socket, addr) -> None:
        # WebSocket clients send their HTTP upgrade immediately; a silent
        # connection is a raw NDJSON observer and must still receive events.
        try:
            sock.settimeout(1.0)
            try:
                first = sock.recv(4, socket.MSG_PEEK)
            except socket.timeout:
                first = b""
            sock.settimeout(None)
        except OSError:
            sock.close()
            return
        websocket = first.startswith(b"GET ")
        if websocket and not self._ws_handshake(sock):
            sock.close()
            return
        client = _Client(sock, addr, websocket)
        with self._lock:
            self._clients.append(client)
        writer = threading.Thread(target=self._write_loop, args=(client,), daemon=True)
        writer.start()
        try:
            if websocket:
                reader = _WsReader(sock)
                while client.alive:
                    text = reader.next_text()
                    if text is None:
                        break
                    self._take_command(text)
            else:
                buf = b""
                while client.alive:
                    chunk = sock.recv(4096)
                    if not chunk:
                        break
                    buf += chunk
                    while b"\n" in buf:
                        line, buf = buf.split(b"\n", 1)
                        if line.strip():
                            self._take_command(line.decode("utf-8", "replace"))
        except OSError:
            pass
        finally:
            self._drop(client)

    def _ws_handshake(self, sock: socket.socket) -> bool:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = sock.recv(4096)
            if not chunk or len(data) > 65536:
                return False
            data += chunk
        headers = {}
        for line in data.split(b"\r\n")[1:]:
            if b":" in line:
                k, v = line.split(b":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get(b"sec-websocket-key")
        if key is None:
            return False
        accept = ws_accept_key(key.decode("ascii"))
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n"
            "\r\n"
        )
        try:
            sock.sendall(response.encode("ascii"))
            return True
        except OSError:
            return False

    def _take_command(self, text: str) -> None:
        try:
            obj = json.loads(text)
            if not isinstance(obj, dict):
                raise ValueError("command must be a JSON object")
        except ValueError as e:
            self.commands.put({"cmd": "__malformed__", "detail": str(e), "raw": text})
            return
        self.commands.put(obj)

    def _write_loop(self, client: _Client) -> None:
        while client.alive:
            try:
                line = client.outbox.get(timeout=0.25)
            except queue.Empty:
                continue
            try:
                if client.websocket:
                    client.sock.sendall(ws_encode_text(line))
                else:
                    client.sock.sendall(line + b"\n")
            except OSError:
                break
        self._drop(client)

    def _drop(self, client: _Client) -> None:
        with self._lock:
            if client in self._clients:
                self._clients.remove(client)
        client.close()

    def broadcast(self, event: dict) -> None:
        line = json.dumps(event, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            if not client.enqueue(line):
                # Slow consumer: drop the client, never block the run loop.
                self.dropped_clients += 1
                self._drop(client)

    def drain_commands(self, limit: int = 64) -> list[dict]:
        out = []
        while len(out) < limit:
            try:
                out.append(self.commands.get_nowait())
            except queue.Empty:
                break
        return out

    @property
    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def close(self) -> None:
        self._running = False
        try:
            self._server.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            client.close()
