"""Command-line entry point.

Subcommands: ``run`` (start a configured simulation), ``analyze`` (behavior
statistics over a run log), ``replay`` (re-emit console events from a log at
scaled time), ``validate-config`` (check a config without running).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time

from . import telemetry
from .config import ConfigError, load_config, validate_config
from .gateway import Runner, StartupError, replay as replay_stream

DURATION_RE = re.compile(r"^(\d+(?:\.\d+)?)(ms|s|m|h)?$")


def parse_duration(text: str) -> float:
    m = DURATION_RE.match(text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r} (try 10s, 2m, 500ms)")
    value = float(m.group(1))
    unit = m.group(2) or "s"
    return value * {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0}[unit]


def _add_run_parser(sub) -> None:
    p = sub.add_parser("run", help="start a simulation run")
    p.add_argument("--config", required=True, help="run config YAML")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--duration", type=parse_duration, default=None,
                   help="run length, e.g. 10s / 2m (headless runs require one)")
    p.add_argument("--headless", action="store_true",
                   help="no pacing, no console; run the ticks flat out")
    p.add_argument("--backend", choices=["live", "scripted"], default=None,
                   help="override the configured backend kind")
    p.add_argument("--console-bind", default=None, metavar="HOST:PORT",
                   help="serve the operator console on this address")
    p.add_argument("--log", default=None, help="override the log path")


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    if args.backend is not None:
        cfg.backend.kind = args.backend
    if args.log is not None:
        cfg.log_path = args.log
    if args.console_bind is not None:
        cfg.console_bind = args.console_bind
    if args.headless:
        cfg.console_bind = None
    try:
        runner = Runner(cfg)
    except StartupError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if runner.console is not None:
        host, port = runner.console.address
        print(f"console listening on {host}:{port}", file=sys.stderr)
    try:
        status = runner.run(args.duration, headless=args.headless)
    except StartupError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"run complete: {runner.ticks} ticks, log at {cfg.log_path}", file=sys.stderr)
    return status


def _add_analyze_parser(sub) -> None:
    p = sub.add_parser("analyze", help="behavior statistics from a run log")
    p.add_argument("logfile")
    p.add_argument("--states", action="store_true", help="stop/move counts")
    p.add_argument("--runs", action="store_true", help="consecutive-run histogram")
    p.add_argument("--terms", metavar="AGENT", default=None,
                   help="ranked term frequencies for one agent")
    p.add_argument("--pre-transition", choices=["move", "stop"], default=None,
                   help="terms in chat messages preceding transitions")
    p.add_argument("--window", type=int, default=3,
                   help="record window for --pre-transition")
    p.add_argument("--export", nargs=2, metavar=("AGENT", "PATH"), default=None,
                   help="write one utterance per line for external tooling")
    p.add_argument("--top-k", type=int, default=20)


def cmd_analyze(args) -> int:
    records, malformed = telemetry.load_records(args.logfile)
    if malformed:
        print(f"# skipped {malformed} malformed line(s)", file=sys.stderr)
    ran_any = False
    if args.states:
        ran_any = True
        for state, count in telemetry.state_counts(records).items():
            print(f"states\t{state}\t{count}")
    if args.runs:
        ran_any = True
        hist = telemetry.run_lengths(records)
        for state in ("stop", "move"):
            for length in sorted(hist[state]):
                print(f"runs\t{state}\t{length}\t{hist[state][length]}")
    if args.terms is not None:
        ran_any = True
        for term, count in telemetry.term_frequency(records, args.terms, args.top_k):
            print(f"terms\t{args.terms}\t{term}\t{count}")
    if args.pre_transition is not None:
        ran_any = True
        ranked = telemetry.pre_transition_terms(records, args.pre_transition,
                                                args.window, args.top_k)
        for term, count in ranked:
            print(f"pre_transition\t{args.pre_transition}\t{term}\t{count}")
    if args.export is not None:
        ran_any = True
        agent, path = args.export
        lines = telemetry.export_corpus(records, agent, path)
        print(f"export\t{agent}\t{path}\t{lines}")
    if not ran_any:
        for state, count in telemetry.state_counts(records).items():
            print(f"states\t{state}\t{count}")
    return 0


def _add_replay_parser(sub) -> None:
    p = sub.add_parser("replay", help="re-emit console events from a log")
    p.add_argument("logfile")
    p.add_argument("--speed", type=float, default=1.0,
                   help="time compression factor (10 = ten times faster)")


def cmd_replay(args) -> int:
    gen = replay_stream(args.logfile, args.speed)
    emitted = 0
    while True:
        try:
            delay, event = next(gen)
        except StopIteration as stop:
            _count, corrupt_line = stop.value if stop.value else (emitted, None)
            if corrupt_line is not None:
                print(f"# stopped at corrupt line {corrupt_line} after {emitted} events",
                      file=sys.stderr)
                return 1
            return 0
        if delay > 0:
            time.sleep(delay)
        print(json.dumps(event, ensure_ascii=False, separators=(",", ":")))
        emitted += 1


def _add_validate_parser(sub) -> None:
    p = sub.add_parser("validate-config", help="check a config without running")
    p.add_argument("--config", required=True)


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    problems = validate_config(cfg)
    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    print("config ok")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plantbot")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_analyze_parser(sub)
    _add_replay_parser(sub)
    _add_validate_parser(sub)
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "analyze": cmd_analyze,
        "replay": cmd_replay,
        "validate-config": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except BrokenPipeError:
        # Downstream pipe (e.g. head) closed; not an error.
        try:
            sys.stdout.close()
        except OSError:
            pass
        return 0


if __name__ == "__main__":
    sys.exit(main())
