"""Completion backends: a live chat-completion HTTP client and a scripted mock.

Both speak the same ``complete(request) -> text`` interface. The scripted
backend replays canned responses from an ordered rule set and is what the
test suite and offline demos run against; the HTTP client targets any
service exposing the common ``/v1/chat/completions`` contract.

Rule files are plain text, one rule per line, five pipe-separated fields::

    priority | role | flags | trigger | response

* ``priority``: integer; higher wins. Ties break in declaration order.
* ``role``: agent id the rule applies to, or ``*`` for any agent.
* ``flags``: ``-`` for none, or ``once`` to let the rule fire a single time.
* ``trigger``: substring matched against the last user turn, or a regular
  expression when written ``/like this/``.
* ``response``: the completion text; may contain ``|``; ``\\n`` becomes a
  newline. Blank lines and ``#`` comments are skipped.
"""

from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass, field

import requests

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
API_KEY_ENV = "PLANTBOT_API_KEY"
DEFAULT_RESPONSE = "..."


class BackendUnavailable(Exception):
    """The backend could not produce a completion (after retries)."""


class ScriptError(Exception):
    """A rule file failed to parse; message names the file and line."""


@dataclass
class ChatTurn:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role {self.role!r} not one of {ROLES}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} turn has empty content")


@dataclass
class CompletionRequest:
    model: str
    turns: list[ChatTurn]
    max_tokens: int = 256
    temperature: float = 0.0

    def __post_init__(self):
        system_count = sum(1 for t in self.turns if t.role == "system")
        if system_count != 1 or not self.turns or self.turns[0].role != "system":
            raise ValueError("request needs exactly one system turn, first")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def last_user_text(self) -> str:
        for turn in reversed(self.turns):
            if turn.role == "user":
                return turn.content
        return ""


@dataclass
class ScriptRule:
    priority: int
    role: str  # agent id or "*"
    trigger: str
    response: str
    once: bool = False
    regex: bool = False
    fire_count: int = 0
    _compiled: re.Pattern | None = field(default=None, repr=False)

    def pattern(self) -> re.Pattern:
        if self._compiled is None:
            self._compiled = re.compile(self.trigger if self.regex else re.escape(self.trigger))
        return self._compiled

    def matches(self, text: str) -> bool:
        if self.once and self.fire_count > 0:
            return False
        return self.pattern().search(text) is not None


class ScriptedBackend:
    """Deterministic backend: highest-priority matching rule wins.

    Rule state (fire counters) is shared between per-role views created
    with ``for_role``, so a rule marked ``once`` fires once per run no
    matter which agent consumed it.
    """

    def __init__(self, rules: list[ScriptRule], default: str = DEFAULT_RESPONSE,
                 role: str | None = None):
        self.rules = rules
        self.default = default
        self.role = role
        self._order = sorted(range(len(rules)), key=lambda i: (-rules[i].priority, i))

    def for_role(self, role: str) -> "ScriptedBackend":
        view = ScriptedBackend.__new__(ScriptedBackend)
        view.rules = self.rules
        view.default = self.default
        view.role = role
        view._order = self._order
        return view

    def reset(self) -> None:
        for rule in self.rules:
            rule.fire_count = 0

    def complete(self, req: CompletionRequest) -> str:
        text = req.last_user_text()
        for i in self._order:
            rule = self.rules[i]
            if rule.role not in ("*", None, self.role):
                continue
            if rule.matches(text):
                rule.fire_count += 1
                return rule.response
        return self.default


def _parse_rule_line(line: str, where: str) -> ScriptRule:
    parts = line.split("|", 4)
    if len(parts) != 5:
        raise ScriptError(f"{where}: expected 5 '|'-separated fields, got {len(parts)}")
    raw_priority, raw_role, raw_flags, raw_trigger, raw_response = parts
    try:
        priority = int(raw_priority.strip())
    except ValueError:
        raise ScriptError(f"{where}: priority {raw_priority.strip()!r} is not an integer") from None
    role = raw_role.strip() or "*"
    flags = {f.strip() for f in raw_flags.strip().split(",") if f.strip() and f.strip() != "-"}
    unknown = flags - {"once"}
    if unknown:
        raise ScriptError(f"{where}: unknown flags {sorted(unknown)}")
    trigger = raw_trigger.strip()
    if not trigger:
        raise ScriptError(f"{where}: empty trigger")
    is_regex = len(trigger) >= 2 and trigger.startswith("/") and trigger.endswith("/")
    if is_regex:
        trigger = trigger[1:-1]
        try:
            re.compile(trigger)
        except re.error as e:
            raise ScriptError(f"{where}: bad regular expression: {e}") from None
    response = raw_response.strip().replace("\\n", "\n")
    return ScriptRule(priority, role, trigger, response, once="once" in flags, regex=is_regex)


def load_script(path: str) -> list[ScriptRule]:
    """Parse a rule file; raises ScriptError naming the offending line."""
    rules: list[ScriptRule] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            rules.append(_parse_rule_line(stripped, f"{path}:{lineno}"))
    return rules


class HttpBackend:
    """Client for OpenAI-compatible chat-completion services.

    Retries transient failures (timeout, transport error, non-2xx) up to
    ``retries`` times with exponential backoff before raising
    BackendUnavailable. The credential comes from the PLANTBOT_API_KEY
    environment variable (OPENAI_API_KEY is honored as a fallback); it is
    never read from configuration files.
    """

    def __init__(self, base_url: str, timeout: float = 20.0, retries: int = 2,
                 backoff_s: float = 0.5, session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff_s = backoff_s
        self.session = session or requests.Session()
        self.requests_made = 0

    def _api_key(self) -> str | None:
        return os.environ.get(API_KEY_ENV) or os.environ.get("OPENAI_API_KEY")

    def complete(self, req: CompletionRequest) -> str:
        url = f"{self.base_url}/v1/chat/completions"
        body = {
            "model": req.model,
            "messages": [{"role": t.role, "content": t.content} for t in req.turns],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        key = self._api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        # Callers are never blocked past timeout * (retries + 1); retries and
        # backoff sleeps all fit inside that hard deadline.
        deadline = time.monotonic() + self.timeout * (self.retries + 1)
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                sleep_s = min(self.backoff_s * (2 ** (attempt - 1)),
                              deadline - time.monotonic())
                if sleep_s > 0:
                    time.sleep(sleep_s)
            budget = deadline - time.monotonic()
            if budget <= 0:
                break
            try:
                self.requests_made += 1
                resp = self.session.post(url, json=body, headers=headers,
                                         timeout=min(self.timeout, budget))
                if resp.status_code // 100 != 2:
                    last_error = BackendUnavailable(f"HTTP {resp.status_code}")
                    continue
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as e:
                last_error = e
        raise BackendUnavailable(f"{url}: {last_error}")
