"""Scripted and live completion backends."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from plantbot.backends import (BackendUnavailable, ChatTurn, CompletionRequest,
                               HttpBackend, ScriptError, ScriptRule,
                               ScriptedBackend, load_script)


def request(text: str, system: str = "sys") -> CompletionRequest:
    return CompletionRequest("scripted", [ChatTurn("system", system),
                                          ChatTurn("user", text)])


class TestRequestShapes:
    def test_system_turn_must_be_first_and_unique(self):
        with pytest.raises(ValueError):
            CompletionRequest("m", [ChatTurn("user", "hi")])
        with pytest.raises(ValueError):
            CompletionRequest("m", [ChatTurn("system", "a"), ChatTurn("system", "b")])

    def test_empty_user_content_rejected(self):
        with pytest.raises(ValueError):
            ChatTurn("user", "")

    def test_last_user_text(self):
        req = CompletionRequest("m", [
            ChatTurn("system", "s"), ChatTurn("user", "one"),
            ChatTurn("assistant", "r"), ChatTurn("user", "two")])
        assert req.last_user_text() == "two"


class TestScriptedBackend:
    def test_trigger_match_returns_response(self):
        rules = [ScriptRule(10, "sensor", "moisture=12", "The soil is dry.")]
        backend = ScriptedBackend(rules, role="sensor")
        reading = "moisture=12.0% temp=22.0C condition=dry"
        assert backend.complete(request(reading)) == "The soil is dry."

    def test_no_match_returns_default(self):
        backend = ScriptedBackend([], default="...")
        assert backend.complete(request("anything")) == "..."

    def test_higher_priority_wins(self):
        rules = [
            ScriptRule(1, "*", "water", "low"),
            ScriptRule(9, "*", "water", "high"),
        ]
        assert ScriptedBackend(rules).complete(request("water please")) == "high"

    def test_duplicate_priority_breaks_by_declaration_order(self):
        rules = [
            ScriptRule(5, "*", "water", "first"),
            ScriptRule(5, "*", "water", "second"),
        ]
        assert ScriptedBackend(rules).complete(request("water")) == "first"

    def test_fire_once(self):
        rules = [
            ScriptRule(9, "*", "dry", "first time", once=True),
            ScriptRule(1, "*", "dry", "afterwards"),
        ]
        backend = ScriptedBackend(rules)
        assert backend.complete(request("dry")) == "first time"
        assert backend.complete(request("dry")) == "afterwards"

    def test_role_views_share_fire_state(self):
        rules = [ScriptRule(5, "*", "x", "only once", once=True)]
        base = ScriptedBackend(rules)
        a, b = base.for_role("chat"), base.for_role("sensor")
        assert a.complete(request("x")) == "only once"
        assert b.complete(request("x")) == base.default

    def test_role_filter(self):
        rules = [ScriptRule(5, "sensor", "x", "sensor only")]
        base = ScriptedBackend(rules)
        assert base.for_role("sensor").complete(request("x")) == "sensor only"
        assert base.for_role("chat").complete(request("x")) == base.default

    def test_regex_trigger(self):
        rules = [ScriptRule(5, "*", r"moisture=\d+", "matched", regex=True)]
        assert ScriptedBackend(rules).complete(request("moisture=42")) == "matched"

    def test_replay_purity(self):
        def transcript():
            rules = [
                ScriptRule(9, "*", "a", "ra", once=True),
                ScriptRule(5, "*", "a", "rb"),
            ]
            backend = ScriptedBackend(rules)
            return [backend.complete(request(t)) for t in ("a", "a", "b", "a")]
        assert transcript() == transcript()


class TestLoadScript:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.rules"
        path.write_text("")
        assert load_script(str(path)) == []

    def test_three_rules_order_preserved(self, tmp_path):
        path = tmp_path / "three.rules"
        path.write_text(
            "# comment\n"
            "10 | sensor | - | dry | The soil is dry.\n"
            "5 | chat | once | water | Could you water me?\n"
            "1 | * | - | /.*/ | fallback with a | pipe\n"
        )
        rules = load_script(str(path))
        assert [r.priority for r in rules] == [10, 5, 1]
        assert rules[1].once and rules[1].role == "chat"
        assert rules[2].regex and rules[2].response == "fallback with a | pipe"

    def test_malformed_line_names_lineno(self, tmp_path):
        path = tmp_path / "bad.rules"
        path.write_text("10 | sensor | - | dry\n")
        with pytest.raises(ScriptError, match=r"bad\.rules:1"):
            load_script(str(path))

    def test_bad_priority_names_lineno(self, tmp_path):
        path = tmp_path / "bad.rules"
        path.write_text("# fine\nxx | a | - | t | r\n")
        with pytest.raises(ScriptError, match=r"bad\.rules:2"):
            load_script(str(path))

    def test_bad_regex_rejected(self, tmp_path):
        path = tmp_path / "bad.rules"
        path.write_text("1 | a | - | /[/ | r\n")
        with pytest.raises(ScriptError, match="regular expression"):
            load_script(str(path))

    def test_newline_escape(self, tmp_path):
        path = tmp_path / "nl.rules"
        path.write_text("1 | a | - | t | line one\\nline two\n")
        assert load_script(str(path))[0].response == "line one\nline two"


class _StubHandler(BaseHTTPRequestHandler):
    status = 200
    reply_text = "stub reply"
    hits = 0

    def do_POST(self):
        type(self).hits += 1
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        assert body["messages"][0]["role"] == "system"
        payload = json.dumps(
            {"choices": [{"message": {"role": "assistant",
                                      "content": type(self).reply_text}}]}
        ).encode()
        self.send_response(type(self).status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.hits = 0
    _StubHandler.status = 200
    yield f"http://127.0.0.1:{server.server_port}", _StubHandler
    server.shutdown()


class TestHttpBackend:
    def test_stub_completion_single_request(self, stub_server):
        url, handler = stub_server
        backend = HttpBackend(url, timeout=5.0)
        text = backend.complete(request("hello", system="be brief"))
        assert text == "stub reply"
        assert handler.hits == 1
        assert backend.requests_made == 1

    def test_non_success_retries_then_unavailable(self, stub_server):
        url, handler = stub_server
        handler.status = 500
        backend = HttpBackend(url, timeout=5.0, retries=2, backoff_s=0.01)
        with pytest.raises(BackendUnavailable):
            backend.complete(request("hello"))
        assert backend.requests_made == 3  # initial + 2 retries

    def test_unreachable_host(self):
        backend = HttpBackend("http://127.0.0.1:1", timeout=0.2, retries=1,
                              backoff_s=0.01)
        with pytest.raises(BackendUnavailable):
            backend.complete(request("hello"))


def test_total_blocking_time_bounded():
    import time as time_mod
    backend = HttpBackend("http://127.0.0.1:1", timeout=0.15, retries=2,
                          backoff_s=10.0)  # backoff larger than the deadline
    started = time_mod.monotonic()
    with pytest.raises(BackendUnavailable):
        backend.complete(request("hello"))
    elapsed = time_mod.monotonic() - started
    assert elapsed <= 0.15 * 3 + 0.25  # timeout * (retries + 1) plus slack
