"""The five role agents and the glue that grounds them in the world.

Sensor and Vision verbalize soil readings and scene observations, Chat
integrates everything (tagged by provenance) and talks to humans, Action1
turns chat context into a move/stay directive, and Action2 turns directives
into motor-command lines. Two non-LLM components close the loop: a feeder
that publishes soil and scene readings on a fixed cadence, and a motor
driver that parses Action2 output, gates it on Action1's latest directive,
applies the obstacle reflex, and drives the simulated robot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import actions
from .actions import (Decision, DirectiveGate, MotionParams, MotorCommand,
                      ParseError, parse_decision, parse_motor_command,
                      reflex_avoid, render_decision, to_motor)
from .bus import Envelope, MessageBus
from .runtime import Agent, AgentSpec
from .telemetry import Recorder
from .world import SceneObservation, SoilState, World

log = logging.getLogger(__name__)

ROLE_IDS = ("sensor", "vision", "chat", "action1", "action2")

CHAT_PROMPT_MARKER = "hybrid system of plant and robot"

TOPICS = {
    "sensor_in": "/plantbot/sensor/in",
    "sensor_out": "/plantbot/sensor/out",
    "vision_in": "/plantbot/vision/in",
    "vision_out": "/plantbot/vision/out",
    "human_in": "/plantbot/human/in",
    "chat_out": "/plantbot/chat/out",
    "action1_out": "/plantbot/action1/out",
    "action2_out": "/plantbot/action2/out",
}

_COUNT_WORDS = {1: "one", 2: "two", 3: "three", 4: "four", 5: "five",
                6: "six", 7: "seven", 8: "eight", 9: "nine"}


@dataclass
class RolePromptSet:
    """One role prompt per agent id; validated against the output conventions
    the downstream parsers rely on."""

    prompts: dict[str, str]

    def validate(self) -> None:
        missing = [r for r in ROLE_IDS if not self.prompts.get(r, "").strip()]
        if missing:
            raise ValueError(f"missing role prompts: {missing}")
        if CHAT_PROMPT_MARKER not in self.prompts["chat"]:
            raise ValueError(f"chat prompt must declare {CHAT_PROMPT_MARKER!r}")
        if "[0]" not in self.prompts["action1"] or "[1]" not in self.prompts["action1"]:
            raise ValueError("action1 prompt must instruct the [0]/[1] convention")
        if "CMD:" not in self.prompts["action2"]:
            raise ValueError("action2 prompt must instruct the CMD: line convention")

    def __getitem__(self, role: str) -> str:
        return self.prompts[role]


@dataclass(frozen=True)
class SoilThresholds:
    dry_below: float = 30.0
    wet_above: float = 70.0

    def tag(self, moisture: float) -> str:
        if moisture < self.dry_below:
            return "dry"
        if moisture > self.wet_above:
            return "wet"
        return "ok"


def format_sensor_input(reading: SoilState,
                        thresholds: SoilThresholds = SoilThresholds()) -> str:
    """One-line quantitative summary plus a qualitative condition tag.

    Values are rounded to one decimal place, which keeps the rendering
    injective on distinct readings at that resolution.
    """
    return (
        f"moisture={reading.moisture:.1f}% temp={reading.temperature:.1f}C "
        f"pH={reading.ph:.1f} EC={reading.ec:.1f} N={reading.n:.1f} "
        f"P={reading.p:.1f} K={reading.k:.1f} "
        f"condition={thresholds.tag(reading.moisture)}"
    )


def format_vision_input(obs: SceneObservation) -> str:
    """Deterministic scene rendering: entities with bearing/distance, a
    person-count phrase, and a per-sector free-space summary."""
    parts: list[str] = []
    if not obs.entities:
        parts.append("no objects visible")
    else:
        persons = [e for e in obs.entities if e.kind == "person"]
        if persons:
            n = len(persons)
            word = _COUNT_WORDS.get(n, str(n))
            noun = "person" if n == 1 else "people"
            parts.append(f"{word} {noun} in view")
        listing = "; ".join(
            f"{e.kind} at {e.bearing_deg:.0f} deg, {e.distance:.1f} m"
            for e in obs.entities
        )
        parts.append(listing)
    free = ", ".join(
        f"{name} {'clear' if clear else 'blocked'}"
        for name, clear in obs.free_sectors.items()
    )
    parts.append(f"free space: {free}")
    return ". ".join(parts)


def format_chat_input(source: str, payload: str) -> str:
    """Prefix heterogeneous inputs with a provenance tag for the chat model."""
    if source not in ("sensor", "vision", "human"):
        raise ValueError(f"unknown chat input source {source!r}")
    return f"[{source}] {payload}"


def _chat_formatter(env: Envelope) -> str:
    return format_chat_input(env.source, env.payload)


def _action2_formatter(env: Envelope) -> str:
    return f"[{env.source}] {env.payload}"


@dataclass
class RoleConfig:
    sensor_interval_s: float = 5.0
    vision_interval_s: float = 3.0
    history: dict[str, int] = field(
        default_factory=lambda: {"sensor": 10, "vision": 0, "chat": 10,
                                 "action1": 10, "action2": 10})
    thresholds: SoilThresholds = SoilThresholds()
    suppress_refresh_s: float = 30.0
    reflex_enabled: bool = True
    reflex_d_safe: float = 0.5
    reflex_sector_deg: float = 90.0
    motion: MotionParams = MotionParams()
    model: str = "scripted"
    temperature: float = 0.0
    max_tokens: int = 256


class WorldFeeder:
    """Publishes soil readings and scene observations on fixed cadences."""

    def __init__(self, world: World, bus: MessageBus, config: RoleConfig):
        self.world = world
        self.bus = bus
        self.config = config
        self._next_sensor = config.sensor_interval_s
        self._next_vision = config.vision_interval_s

    def step(self) -> None:
        t = self.world.sim_time
        if t >= self._next_sensor - 1e-9:
            self._next_sensor += self.config.sensor_interval_s
            text = format_sensor_input(self.world.soil, self.config.thresholds)
            self.bus.send("world", TOPICS["sensor_in"], text)
        if t >= self._next_vision - 1e-9:
            self._next_vision += self.config.vision_interval_s
            text = format_vision_input(self.world.observe_scene())
            self.bus.send("world", TOPICS["vision_in"], text)


class MotorDriver:
    """Applies Action2 output to the world, one tick slice at a time.

    Keeps Action1's latest directive as a motion gate, re-runs the reflex
    against a fresh LiDAR scan every tick while a forward command is live,
    and records motor/error telemetry.
    """

    def __init__(self, world: World, bus: MessageBus, recorder: Recorder | None,
                 config: RoleConfig):
        self.world = world
        self.bus = bus
        self.recorder = recorder
        self.config = config
        self.inbox = bus.inbox("world")
        self.current: MotorCommand | None = None
        self.remaining = 0.0
        self.latest_move = False
        self._reflex_active = False

    def _pose_tuple(self) -> tuple[float, float, float]:
        p = self.world.pose
        return (p.x, p.y, p.heading)

    def _record_motor(self, cmd: MotorCommand, note: str = "") -> None:
        if self.recorder is None:
            return
        text = f"left={cmd.left:.3f} right={cmd.right:.3f} dur={cmd.duration:.2f}"
        if note:
            text = f"{text} ({note})"
        self.recorder.motor("world", text, pose=self._pose_tuple())

    def _take_command(self, payload: str) -> None:
        try:
            verb = parse_motor_command(payload)
        except ParseError as e:
            if self.recorder is not None:
                self.recorder.error("action2", f"motor parse failed: {e}")
            verb = actions.VerbCommand("stop")
        cmd = to_motor(verb, self.config.motion)
        self.current = cmd
        self.remaining = cmd.duration
        self._reflex_active = False
        self._record_motor(cmd, note=verb.verb)

    def step(self, dt: float) -> None:
        for env in self.inbox:
            if env.topic == TOPICS["action1_out"]:
                try:
                    self.latest_move = parse_decision(env.payload).move
                except ParseError:
                    self.latest_move = False
            elif env.topic == TOPICS["action2_out"]:
                self._take_command(env.payload)
        if self.current is None or self.remaining <= 0:
            return
        cmd = self.current
        if cmd.is_motion and not self.latest_move:
            # Action1's latest directive is Stop: motion is gated off.
            self.current = None
            self.remaining = 0.0
            return
        if self.config.reflex_enabled and cmd.is_forward:
            scan = self.world.lidar_scan()
            replacement = reflex_avoid(cmd, scan, self.config.reflex_d_safe,
                                       self.config.reflex_sector_deg)
            if replacement is not cmd:
                self.current = replacement
                cmd = replacement
                if not self._reflex_active:
                    self._reflex_active = True
                    self._record_motor(cmd, note="reflex")
            else:
                self._reflex_active = False
        slice_dt = min(dt, self.remaining)
        if cmd.is_motion and slice_dt > 0:
            self.world.step_robot(cmd, slice_dt)
        self.remaining -= dt


class RoleSystem:
    """Handle over the wired agents plus the feeder and motor driver."""

    def __init__(self, agents: dict[str, Agent], feeder: WorldFeeder,
                 driver: MotorDriver, gate: DirectiveGate):
        self.agents = agents
        self.feeder = feeder
        self.driver = driver
        self.gate = gate

    def step(self, dt: float) -> None:
        """One scheduler pass: feed, then each agent in cascade order,
        then the motor driver."""
        self.feeder.step()
        for role in ROLE_IDS:
            self.agents[role].step()
        self.driver.step(dt)


def wire_agents(prompts: RolePromptSet, bus: MessageBus, backends: dict,
                world: World, recorder: Recorder | None = None,
                config: RoleConfig | None = None) -> RoleSystem:
    """Build and connect the full agent network over ``bus``.

    ``backends`` maps each role id to a completion backend. Raises on a
    missing prompt or backend, and on a route table missing the core
    topology.
    """
    config = config or RoleConfig()
    prompts.validate()
    missing = [r for r in ROLE_IDS if r not in backends]
    if missing:
        raise ValueError(f"missing backends for roles: {missing}")
    missing_edges = bus.routes.missing_core_edges()
    if missing_edges:
        raise ValueError(f"route table lacks core edges: {missing_edges}")

    gate = DirectiveGate(bus.clock, refresh_s=config.suppress_refresh_s)

    def record_error(agent_id: str, message: str) -> None:
        if recorder is not None:
            recorder.error(agent_id, message)

    def action1_post(text: str) -> str | None:
        try:
            decision = parse_decision(text)
        except ParseError:
            record_error("action1", f"unparseable decision, defaulting to stop: {text}")
            decision = Decision(move=False, reason=text.strip())
        if recorder is not None:
            recorder.decision("action1", render_decision(decision),
                              flag=1 if decision.move else 0)
        if gate.should_emit(decision):
            return render_decision(decision)
        return None

    def spec(role: str, subscriptions: list[str], out: str, **kw) -> AgentSpec:
        return AgentSpec(
            id=role,
            role_prompt=prompts[role],
            output_topic=out,
            subscriptions=subscriptions,
            history_capacity=config.history.get(role, 10),
            model=config.model,
            temperature=config.temperature,
            max_tokens=config.max_tokens,
            **kw,
        )

    agents = {
        "sensor": Agent(
            spec("sensor", [TOPICS["sensor_in"]], TOPICS["sensor_out"],
                 coalesce_inbound=True),
            bus, backends["sensor"], on_error=record_error),
        "vision": Agent(
            spec("vision", [TOPICS["vision_in"]], TOPICS["vision_out"]),
            bus, backends["vision"], on_error=record_error),
        "chat": Agent(
            spec("chat", [TOPICS["sensor_out"], TOPICS["vision_out"],
                          TOPICS["human_in"]], TOPICS["chat_out"]),
            bus, backends["chat"], input_formatter=_chat_formatter,
            on_error=record_error),
        "action1": Agent(
            spec("action1", [TOPICS["chat_out"]], TOPICS["action1_out"],
                 postprocessor="decision"),
            bus, backends["action1"], postprocess=action1_post,
            on_error=record_error),
        "action2": Agent(
            spec("action2", [TOPICS["chat_out"], TOPICS["action1_out"]],
                 TOPICS["action2_out"], postprocessor="motor",
                 context_only_sources=frozenset({"chat"})),
            bus, backends["action2"], input_formatter=_action2_formatter,
            on_error=record_error),
    }
    feeder = WorldFeeder(world, bus, config)
    driver = MotorDriver(world, bus, recorder, config)
    return RoleSystem(agents, feeder, driver, gate)
