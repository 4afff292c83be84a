"""Structured run logs and the behavioral statistics computed from them.

Every envelope, decision, motor application, world event, and error in a
run lands in one append-only file of line-delimited JSON records with a
fixed key order: ts (ms), seq, run, agent, kind, flag, pose, text. ``seq``
increases strictly within a run; ``flag`` is present exactly on decision
records (0 = stop, 1 = move); ``pose`` is an [x, y, heading] triple on
records that carry one. Malformed lines are skipped and counted on load,
never fatal.

The analysis side reduces a record list to the statistics the operator
cares about: stop/move state counts, consecutive-run-length histograms,
per-agent term frequencies, the terms in chat messages that immediately
precede state transitions, and plain-text corpus exports for downstream
embedding tools.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass

KINDS = ("utterance", "decision", "motor", "world", "error")

# Small English function-word list; the domain words the analyses rank
# (soil, water, move, stable, ...) must never appear here.
DEFAULT_STOP_WORDS = frozenset("""
a an and are as at be been but by can could did do does for from had has have
he her his how i if in into is it its im me my no not of on or our s she so
t that the their them then there these they this to was we were what when
which who will with would you your
""".split())

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class LogRecord:
    ts_ms: int
    seq: int
    run_id: str
    agent: str
    kind: str
    text: str
    flag: int | None = None
    pose: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind {self.kind!r} not one of {KINDS}")
        if (self.flag is not None) != (self.kind == "decision"):
            raise ValueError("flag is present exactly on decision records")
        if self.flag not in (None, 0, 1):
            raise ValueError(f"flag must be 0 or 1, got {self.flag}")


def to_json_line(rec: LogRecord) -> str:
    obj = {
        "ts": rec.ts_ms,
        "seq": rec.seq,
        "run": rec.run_id,
        "agent": rec.agent,
        "kind": rec.kind,
    }
    if rec.flag is not None:
        obj["flag"] = rec.flag
    if rec.pose is not None:
        obj["pose"] = [round(v, 6) for v in rec.pose]
    obj["text"] = rec.text
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def from_json_line(line: str) -> LogRecord:
    obj = json.loads(line)
    pose = obj.get("pose")
    return LogRecord(
        ts_ms=int(obj["ts"]),
        seq=int(obj["seq"]),
        run_id=str(obj["run"]),
        agent=str(obj["agent"]),
        kind=str(obj["kind"]),
        text=str(obj["text"]),
        flag=obj.get("flag"),
        pose=tuple(pose) if pose is not None else None,
    )


class LogWriter:
    """Append-only sink; one JSON line per record."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")
        self.count = 0

    def append(self, rec: LogRecord) -> None:
        self._fh.write(to_json_line(rec) + "\n")
        self.count += 1

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "LogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def append_record(sink: LogWriter, rec: LogRecord) -> None:
    sink.append(rec)


def load_records(path: str) -> tuple[list[LogRecord], int]:
    """Read records in file order; returns (records, malformed line count)."""
    records: list[LogRecord] = []
    malformed = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(from_json_line(line))
            except (ValueError, KeyError, TypeError):
                malformed += 1
    return records, malformed


class Recorder:
    """Builds sequenced records against the simulated clock and one sink."""

    def __init__(self, run_id: str, clock, sink: LogWriter | None):
        self.run_id = run_id
        self.clock = clock
        self.sink = sink
        self._seq = 0
        self.listeners: list = []

    def _emit(self, agent: str, kind: str, text: str, flag: int | None = None,
              pose: tuple[float, float, float] | None = None) -> LogRecord:
        self._seq += 1
        rec = LogRecord(self.clock.now_ms, self._seq, self.run_id, agent, kind,
                        text, flag, pose)
        if self.sink is not None:
            self.sink.append(rec)
        for fn in self.listeners:
            fn(rec)
        return rec

    def utterance(self, agent: str, text: str) -> LogRecord:
        return self._emit(agent, "utterance", text)

    def decision(self, agent: str, text: str, flag: int) -> LogRecord:
        return self._emit(agent, "decision", text, flag=flag)

    def motor(self, agent: str, text: str,
              pose: tuple[float, float, float] | None = None) -> LogRecord:
        return self._emit(agent, "motor", text, pose=pose)

    def world(self, text: str, pose: tuple[float, float, float] | None = None) -> LogRecord:
        return self._emit("world", "world", text, pose=pose)

    def error(self, agent: str, text: str) -> LogRecord:
        return self._emit(agent, "error", text)


# -- analyses ---------------------------------------------------------------


def _decisions(records: list[LogRecord]) -> list[LogRecord]:
    return [r for r in records if r.kind == "decision"]


def state_counts(records: list[LogRecord]) -> dict[str, int]:
    counts = {"stop": 0, "move": 0}
    for rec in _decisions(records):
        counts["move" if rec.flag else "stop"] += 1
    return counts


def run_lengths(records: list[LogRecord]) -> dict[str, dict[int, int]]:
    """Histogram of maximal same-flag run lengths, per state, in seq order."""
    hist: dict[str, dict[int, int]] = {"stop": {}, "move": {}}
    decisions = sorted(_decisions(records), key=lambda r: r.seq)
    run_flag: int | None = None
    run_len = 0
    for rec in decisions:
        if rec.flag == run_flag:
            run_len += 1
        else:
            if run_flag is not None:
                key = "move" if run_flag else "stop"
                hist[key][run_len] = hist[key].get(run_len, 0) + 1
            run_flag = rec.flag
            run_len = 1
    if run_flag is not None:
        key = "move" if run_flag else "stop"
        hist[key][run_len] = hist[key].get(run_len, 0) + 1
    return hist


def tokenize(text: str, stop_words: frozenset[str] = DEFAULT_STOP_WORDS) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in stop_words]


def _ranked(counter: Counter, top_k: int) -> list[tuple[str, int]]:
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]


def term_frequency(records: list[LogRecord], agent: str | None = None,
                   top_k: int = 20,
                   stop_words: frozenset[str] = DEFAULT_STOP_WORDS) -> list[tuple[str, int]]:
    """Ranked (term, count) over an agent's language output.

    Utterance and decision records count (decisions carry the action
    agent's language); motor/world/error records do not.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    counter: Counter = Counter()
    for rec in records:
        if rec.kind not in ("utterance", "decision"):
            continue
        if agent is not None and rec.agent != agent:
            continue
        counter.update(tokenize(rec.text, stop_words))
    return _ranked(counter, top_k)


def pre_transition_terms(records: list[LogRecord], target: str, window: int = 3,
                         top_k: int = 20,
                         stop_words: frozenset[str] = DEFAULT_STOP_WORDS) -> list[tuple[str, int]]:
    """Terms in chat utterances within ``window`` records before each
    transition into ``target`` ('move' or 'stop')."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if target not in ("move", "stop"):
        raise ValueError("target must be 'move' or 'stop'")
    target_flag = 1 if target == "move" else 0
    ordered = sorted(records, key=lambda r: r.seq)
    chat = [r for r in ordered if r.kind == "utterance" and r.agent == "chat"]
    counter: Counter = Counter()
    prev_flag: int | None = None
    for rec in ordered:
        if rec.kind != "decision":
            continue
        if prev_flag is not None and rec.flag != prev_flag and rec.flag == target_flag:
            for c in chat:
                if rec.seq - window <= c.seq < rec.seq:
                    counter.update(tokenize(c.text, stop_words))
        prev_flag = rec.flag
    return _ranked(counter, top_k)


def export_corpus(records: list[LogRecord], agent: str, path: str) -> int:
    """One utterance per line (newlines flattened); returns the line count."""
    lines = [
        rec.text.replace("\n", " ")
        for rec in records
        if rec.kind in ("utterance", "decision") and rec.agent == agent
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)
