"""Run orchestration: world clock, bus, agents, telemetry, and the console.

A run is a fixed-step tick loop over one simulated clock. Each tick applies
due scenario events and console commands, advances the soil and the clock,
lets the feeder and each agent take one step in cascade order, applies
motion through the motor driver, and fans console events out to connected
clients. Headless runs execute ticks as fast as possible and are bit-for-bit
reproducible for a given config and seed; interactive runs pace the same
loop against wall time.

Console events are derived from log records through one total mapping
(``record_to_event``), so replaying a log file reproduces exactly the event
stream a live console saw.
"""

from __future__ import annotations

import logging
import os
import re
import time

from .backends import HttpBackend, ScriptedBackend, load_script
from .bus import Envelope, MessageBus, RouteTable, default_routes
from .clock import SimClock
from .config import (ConfigError, RunConfig, Scenario, default_prompt_paths,
                     load_scenario, validate_config)
from .console import ConsoleServer
from .roles import RolePromptSet, RoleSystem, format_sensor_input, wire_agents
from .telemetry import LogRecord, LogWriter, Recorder, from_json_line
from .world import Circle, World

log = logging.getLogger(__name__)

COMMAND_KINDS = ("user_utterance", "set_soil_moisture", "add_obstacle", "water",
                 "pause", "resume")

_SOIL_TEXT_RE = re.compile(
    r"moisture=([\d.]+)% temp=([-\d.]+)C pH=([\d.]+) EC=([\d.]+) "
    r"N=([\d.]+) P=([\d.]+) K=([\d.]+) condition=(\w+)"
)


class StartupError(Exception):
    """A subsystem failed to come up; message names the subsystem."""


def record_to_event(rec: LogRecord) -> dict:
    """Total 1:1 mapping from log records to console events."""
    base = {"ts": rec.ts_ms}
    if rec.kind == "utterance":
        if rec.agent == "chat":
            return {"event": "chat_reply", "text": rec.text, **base}
        return {"event": "agent_msg", "agent": rec.agent, "text": rec.text, **base}
    if rec.kind == "decision":
        return {"event": "decision", "flag": rec.flag, "text": rec.text, **base}
    if rec.kind == "error":
        return {"event": "error", "agent": rec.agent, "text": rec.text, **base}
    if rec.kind == "motor":
        return {"event": "agent_msg", "agent": "motor", "text": rec.text, **base}
    # world records: pose snapshots carry a pose; soil readings parse back
    if rec.pose is not None:
        event = {"event": "pose", "x": rec.pose[0], "y": rec.pose[1],
                 "heading": rec.pose[2], **base}
        if rec.text.startswith("pose scan="):
            event["scan"] = [float(v) for v in rec.text[len("pose scan="):].split(",") if v]
        return event
    m = _SOIL_TEXT_RE.search(rec.text)
    if m:
        return {
            "event": "soil",
            "moisture": float(m.group(1)), "temperature": float(m.group(2)),
            "ph": float(m.group(3)), "ec": float(m.group(4)),
            "n": float(m.group(5)), "p": float(m.group(6)), "k": float(m.group(7)),
            "condition": m.group(8), **base,
        }
    return {"event": "agent_msg", "agent": "world", "text": rec.text, **base}


class Runner:
    """One configured run: builds every subsystem, then ticks."""

    def __init__(self, cfg: RunConfig, console: ConsoleServer | None = None,
                 routes: RouteTable | None = None):
        problems = validate_config(cfg)
        if problems:
            raise StartupError("config: " + "; ".join(problems))
        self.cfg = cfg
        self.dt = cfg.tick_ms / 1000.0
        self.clock = SimClock()
        try:
            self.scenario: Scenario = load_scenario(cfg.scenario_path)
        except ConfigError as e:
            raise StartupError(f"scenario: {e}") from None
        self.world: World = self.scenario.build_world(cfg.seed)
        table = routes or default_routes()
        for pattern, sub in cfg.extra_routes:
            table.add(pattern, sub)
        self.bus = MessageBus(table, self.clock)
        self._open_log()
        self.recorder = Recorder(cfg.effective_run_id(), self.clock, self.log_writer)
        self.bus.add_tap(self._tap_envelope)
        prompts = self._load_prompts()
        backends = self._build_backends()
        try:
            self.system: RoleSystem = wire_agents(prompts, self.bus, backends,
                                                  self.world, self.recorder,
                                                  cfg.role_config())
        except ValueError as e:
            raise StartupError(f"agents: {e}") from None
        self.console = console
        if console is None and cfg.console_bind:
            host, _, port = cfg.console_bind.partition(":")
            try:
                self.console = ConsoleServer(host, int(port))
            except OSError as e:
                raise StartupError(f"console: cannot bind {cfg.console_bind}: {e}") from None
        if self.console is not None:
            self.recorder.listeners.append(
                lambda rec: self.console.broadcast(record_to_event(rec)))
        self._pending_events = list(self.scenario.events)
        self.paused = False
        self.ticks = 0
        self._ticks_since_pose = 0
        self.speaker_inbox = self.bus.inbox("speaker")

    def _open_log(self) -> None:
        try:
            if os.path.exists(self.cfg.log_path):
                os.remove(self.cfg.log_path)
            self.log_writer = LogWriter(self.cfg.log_path)
        except OSError as e:
            raise StartupError(f"log sink: {self.cfg.log_path}: {e}") from None

    def _load_prompts(self) -> RolePromptSet:
        paths = dict(default_prompt_paths())
        paths.update(self.cfg.prompt_paths)
        prompts = {}
        for role, path in paths.items():
            try:
                with open(path, encoding="utf-8") as fh:
                    prompts[role] = fh.read()
            except OSError as e:
                raise StartupError(f"prompts: {path}: {e}") from None
        return RolePromptSet(prompts)

    def _build_backends(self) -> dict:
        b = self.cfg.backend
        if b.kind == "scripted":
            rules = []
            if b.script:
                try:
                    rules = load_script(b.script)
                except Exception as e:
                    raise StartupError(f"backend: {e}") from None
            base = ScriptedBackend(rules, default=b.default_response)
            return {role: base.for_role(role)
                    for role in ("sensor", "vision", "chat", "action1", "action2")}
        live = HttpBackend(b.base_url, timeout=b.timeout_s, retries=b.retries)
        return {role: live for role in ("sensor", "vision", "chat", "action1", "action2")}

    # -- commands -----------------------------------------------------------

    def _tap_envelope(self, env: Envelope) -> None:
        if env.topic.endswith("/in") and env.source == "world":
            self.recorder.world(env.payload)
        else:
            self.recorder.utterance(env.source, env.payload)

    def handle_command(self, cmd: dict) -> None:
        """Apply one console command; acknowledged by a record/event."""
        kind = cmd.get("cmd")
        try:
            if kind == "user_utterance":
                text = str(cmd["text"])
                self.bus.send("human", "/plantbot/human/in", text)
            elif kind == "set_soil_moisture":
                self.world.set_soil_moisture(float(cmd["value"]))
                self._flush_world_events()
                self.recorder.world(format_sensor_input(self.world.soil,
                                                        self.cfg.thresholds))
            elif kind == "water":
                self.world.apply_water_event(float(cmd["liters"]))
                self._flush_world_events()
            elif kind == "add_obstacle":
                self.world.add_obstacle(Circle(float(cmd["x"]), float(cmd["y"]),
                                               float(cmd["r"])))
                self._flush_world_events()
            elif kind == "pause":
                self.paused = True
                self.recorder.world("paused")
                self._emit_pose()
            elif kind == "resume":
                self.paused = False
                self.recorder.world("resumed")
            else:
                detail = cmd.get("detail", f"unknown command {kind!r}")
                self.recorder.error("console", str(detail))
        except (KeyError, TypeError, ValueError) as e:
            self.recorder.error("console", f"bad {kind} command: {e}")

    def _flush_world_events(self) -> None:
        for _t, text in self.world.events:
            self.recorder.world(text)
        self.world.events.clear()

    def _emit_pose(self) -> None:
        p = self.world.pose
        scan = self.world.lidar_scan()
        text = "pose scan=" + ",".join(f"{r:.2f}" for r in scan.ranges)
        self.recorder.world(text, pose=(p.x, p.y, p.heading))

    # -- loop ---------------------------------------------------------------

    def tick(self) -> None:
        if self.console is not None:
            for cmd in self.console.drain_commands():
                self.handle_command(cmd)
        if not self.paused:
            now = self.world.sim_time
            while self._pending_events and self._pending_events[0].at_s <= now + 1e-9:
                self._apply_scenario_event(self._pending_events.pop(0))
            self.world.step(self.dt)
            self.clock.advance(self.dt)
            self.system.step(self.dt)
            self._flush_world_events()
        self.speaker_inbox.drain()  # chat_reply events already derive from records
        self._ticks_since_pose += 1
        if self._ticks_since_pose * self.dt >= self.cfg.pose_log_interval_s - 1e-9:
            self._ticks_since_pose = 0
            self._emit_pose()
        self.ticks += 1

    def _apply_scenario_event(self, ev) -> None:
        if ev.kind == "set_soil_moisture":
            self.world.set_soil_moisture(float(ev.value))
        elif ev.kind == "water":
            self.world.apply_water_event(float(ev.liters))
        elif ev.kind == "add_obstacle":
            self.world.add_obstacle(Circle(float(ev.x), float(ev.y), float(ev.r)))
        elif ev.kind == "human":
            self.bus.send("human", "/plantbot/human/in", str(ev.text))
        self._flush_world_events()

    def run(self, duration_s: float | None = None, headless: bool = True) -> int:
        """Tick until the duration elapses (or forever); returns exit status."""
        duration = duration_s if duration_s is not None else self.cfg.duration_s
        try:
            if duration is None and headless:
                raise StartupError("runner: headless run needs a duration")
            end = None if duration is None else duration
            while True:
                if end is not None and self.world.sim_time >= end - 1e-9:
                    break
                started = time.monotonic()
                self.tick()
                if not headless:
                    remaining = self.dt - (time.monotonic() - started)
                    if remaining > 0:
                        time.sleep(remaining)
        except KeyboardInterrupt:
            pass
        finally:
            self.close()
        return 0

    def close(self) -> None:
        self.log_writer.flush()
        self.log_writer.close()
        if self.console is not None:
            self.console.close()


def run(cfg: RunConfig, duration_s: float | None = None, headless: bool = True,
        console: ConsoleServer | None = None) -> int:
    runner = Runner(cfg, console=console)
    return runner.run(duration_s, headless)


def replay(logfile: str, speed: float = 1.0):
    """Yield (delay_s, event) pairs from a log at scaled time.

    Reading stops at the first corrupt line; the generator's StopIteration
    value is (events_emitted, corrupt_line_number or None).
    """
    if speed <= 0:
        raise ValueError("speed must be > 0")
    emitted = 0
    corrupt_line = None
    last_ts: int | None = None
    with open(logfile, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = from_json_line(line)
            except (ValueError, KeyError, TypeError):
                corrupt_line = lineno
                break
            delay = 0.0 if last_ts is None else max(0, rec.ts_ms - last_ts) / 1000.0 / speed
            last_ts = rec.ts_ms
            emitted += 1
            yield delay, record_to_event(rec)
    return emitted, corrupt_line
