"""Run configuration and scenario files.

Both are YAML. Relative paths inside a file resolve against that file's
directory, so the shipped config/scenario/script/prompt bundles stay
relocatable. A run config names the scenario, the backend (scripted rule
file or live HTTP service), per-agent history capacities, cadences,
reflex/motion parameters, the log path, the seed, and an optional console
bind address. A scenario file describes the arena: bounds, robot start,
soil initial state and dynamics, obstacles, scripted entities, and timed
events (set_soil_moisture / water / add_obstacle / human).
"""

from __future__ import annotations

import importlib.resources
import os
from dataclasses import dataclass, field

import yaml

from .actions import MotionParams
from .roles import RoleConfig, SoilThresholds
from .world import (Circle, Entity, SoilParams, SoilState, RobotPose, Wall,
                    World, WorldConfig)

EVENT_KINDS = ("set_soil_moisture", "water", "add_obstacle", "human")


class ConfigError(Exception):
    pass


def data_path(*parts: str) -> str:
    """Path to a file shipped inside the package's data directory."""
    root = importlib.resources.files("plantbot").joinpath("data")
    return str(root.joinpath(*parts))


def _resolve(base_dir: str, path: str) -> str:
    if os.path.isabs(path):
        return path
    if path.startswith("builtin:"):
        return data_path(*path[len("builtin:"):].split("/"))
    return os.path.normpath(os.path.join(base_dir, path))


@dataclass
class ScenarioEvent:
    at_s: float
    kind: str
    value: float | None = None
    liters: float | None = None
    text: str | None = None
    x: float | None = None
    y: float | None = None
    r: float | None = None


@dataclass
class Scenario:
    name: str = "scenario"
    bounds: tuple[float, float, float, float] | None = (-5.0, -5.0, 5.0, 5.0)
    robot: RobotPose = field(default_factory=RobotPose)
    robot_radius: float = 0.2
    track_width: float = 0.4
    soil: SoilState = field(default_factory=SoilState)
    soil_params: SoilParams = field(default_factory=SoilParams)
    lidar_rays: int = 72
    lidar_max_range: float = 10.0
    fov_deg: float = 120.0
    vision_max_distance: float = 8.0
    obstacles: list[Circle] = field(default_factory=list)
    walls: list[Wall] = field(default_factory=list)
    entities: list[Entity] = field(default_factory=list)
    events: list[ScenarioEvent] = field(default_factory=list)

    def build_world(self, seed: int) -> World:
        cfg = WorldConfig(
            bounds=self.bounds,
            track_width=self.track_width,
            robot_radius=self.robot_radius,
            lidar_rays=self.lidar_rays,
            lidar_max_range=self.lidar_max_range,
            fov_deg=self.fov_deg,
            vision_max_distance=self.vision_max_distance,
            soil=self.soil_params,
        )
        world = World(cfg, seed=seed, pose=RobotPose(self.robot.x, self.robot.y, self.robot.heading),
                      soil=SoilState(**vars(self.soil)))
        world.obstacles = list(self.obstacles)
        world.walls = list(self.walls)
        world.entities = [Entity(**vars(e)) for e in self.entities]
        return world


def _take(mapping: dict, cls, where: str):
    try:
        return cls(**mapping)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}") from None


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"scenario {path}: bad YAML: {e}") from None
    sc = Scenario()
    sc.name = raw.get("name", os.path.splitext(os.path.basename(path))[0])
    if "bounds" in raw:
        b = raw["bounds"]
        sc.bounds = None if b is None else tuple(float(v) for v in b)
    robot = raw.get("robot", {})
    sc.robot = RobotPose(float(robot.get("x", 0.0)), float(robot.get("y", 0.0)),
                         float(robot.get("heading", 0.0)))
    sc.robot_radius = float(robot.get("radius", 0.2))
    sc.track_width = float(robot.get("track_width", 0.4))
    if "soil" in raw:
        sc.soil = _take(raw["soil"], SoilState, f"{path}: soil")
    if "soil_params" in raw:
        sc.soil_params = _take(raw["soil_params"], SoilParams, f"{path}: soil_params")
    lidar = raw.get("lidar", {})
    sc.lidar_rays = int(lidar.get("rays", 72))
    sc.lidar_max_range = float(lidar.get("max_range", 10.0))
    vision = raw.get("vision", {})
    sc.fov_deg = float(vision.get("fov_deg", 120.0))
    sc.vision_max_distance = float(vision.get("max_distance", 8.0))
    for i, ob in enumerate(raw.get("obstacles", []) or []):
        kind = ob.get("kind", "circle")
        if kind == "circle":
            sc.obstacles.append(Circle(float(ob["x"]), float(ob["y"]), float(ob["r"])))
        elif kind == "wall":
            sc.walls.append(Wall(float(ob["x1"]), float(ob["y1"]),
                                 float(ob["x2"]), float(ob["y2"])))
        else:
            raise ConfigError(f"{path}: obstacles[{i}]: unknown kind {kind!r}")
    for i, en in enumerate(raw.get("entities", []) or []):
        sc.entities.append(Entity(
            kind=en.get("kind", "person"), x=float(en["x"]), y=float(en["y"]),
            appear_s=float(en.get("appear_s", 0.0)),
            disappear_s=float(en.get("disappear_s", float("inf"))),
        ))
    for i, ev in enumerate(raw.get("events", []) or []):
        kind = ev.get("kind")
        if kind not in EVENT_KINDS:
            raise ConfigError(f"{path}: events[{i}]: unknown kind {kind!r}")
        sc.events.append(ScenarioEvent(
            at_s=float(ev["at_s"]), kind=kind,
            value=ev.get("value"), liters=ev.get("liters"), text=ev.get("text"),
            x=ev.get("x"), y=ev.get("y"), r=ev.get("r"),
        ))
    sc.events.sort(key=lambda e: e.at_s)
    return sc


@dataclass
class BackendConfig:
    kind: str = "scripted"  # scripted | live
    script: str | None = None
    default_response: str = "..."
    base_url: str = "http://127.0.0.1:8080"
    model: str = "local-chat"
    temperature: float = 0.7
    max_tokens: int = 256
    timeout_s: float = 20.0
    retries: int = 2


@dataclass
class RunConfig:
    seed: int = 0
    run_id: str | None = None
    tick_ms: int = 100
    duration_s: float | None = None
    log_path: str = "plantbot-run.jsonl"
    scenario_path: str = ""
    backend: BackendConfig = field(default_factory=BackendConfig)
    prompt_paths: dict[str, str] = field(default_factory=dict)
    history: dict[str, int] = field(default_factory=dict)
    sensor_interval_s: float = 5.0
    vision_interval_s: float = 3.0
    thresholds: SoilThresholds = field(default_factory=SoilThresholds)
    suppress_refresh_s: float = 30.0
    reflex_enabled: bool = True
    reflex_d_safe: float = 0.5
    reflex_sector_deg: float = 90.0
    motion: MotionParams = field(default_factory=MotionParams)
    console_bind: str | None = None
    pose_log_interval_s: float = 1.0
    extra_routes: list[tuple[str, str]] = field(default_factory=list)

    def effective_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        stem = os.path.splitext(os.path.basename(self.scenario_path))[0] or "run"
        return f"{stem}-seed{self.seed}"

    def role_config(self) -> RoleConfig:
        history = {"sensor": 10, "vision": 0, "chat": 10, "action1": 10, "action2": 10}
        history.update(self.history)
        return RoleConfig(
            sensor_interval_s=self.sensor_interval_s,
            vision_interval_s=self.vision_interval_s,
            history=history,
            thresholds=self.thresholds,
            suppress_refresh_s=self.suppress_refresh_s,
            reflex_enabled=self.reflex_enabled,
            reflex_d_safe=self.reflex_d_safe,
            reflex_sector_deg=self.reflex_sector_deg,
            motion=self.motion,
            model=self.backend.model if self.backend.kind == "live" else "scripted",
            temperature=self.backend.temperature if self.backend.kind == "live" else 0.0,
            max_tokens=self.backend.max_tokens,
        )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path}: bad YAML: {e}") from None
    base = os.path.dirname(os.path.abspath(path))
    cfg = RunConfig()
    cfg.seed = int(raw.get("seed", 0))
    cfg.run_id = raw.get("run_id")
    cfg.tick_ms = int(raw.get("tick_ms", 100))
    if raw.get("duration_s") is not None:
        cfg.duration_s = float(raw["duration_s"])
    # Inputs resolve against the config file; the log is an output and
    # lands relative to the working directory instead.
    cfg.log_path = os.path.abspath(raw.get("log_path", "plantbot-run.jsonl"))
    if "scenario" not in raw:
        raise ConfigError(f"{path}: missing 'scenario'")
    cfg.scenario_path = _resolve(base, raw["scenario"])
    b = raw.get("backend", {})
    cfg.backend = BackendConfig(
        kind=b.get("kind", "scripted"),
        script=_resolve(base, b["script"]) if b.get("script") else None,
        default_response=b.get("default_response", "..."),
        base_url=b.get("base_url", "http://127.0.0.1:8080"),
        model=b.get("model", "local-chat"),
        temperature=float(b.get("temperature", 0.7)),
        max_tokens=int(b.get("max_tokens", 256)),
        timeout_s=float(b.get("timeout_s", 20.0)),
        retries=int(b.get("retries", 2)),
    )
    if cfg.backend.kind not in ("scripted", "live"):
        raise ConfigError(f"{path}: backend.kind must be scripted or live")
    for role, p in (raw.get("prompts") or {}).items():
        cfg.prompt_paths[role] = _resolve(base, p)
    cfg.history = {k: int(v) for k, v in ((raw.get("agents") or {}).get("history") or {}).items()}
    intervals = raw.get("intervals", {})
    cfg.sensor_interval_s = float(intervals.get("sensor_s", 5.0))
    cfg.vision_interval_s = float(intervals.get("vision_s", 3.0))
    th = raw.get("thresholds", {})
    cfg.thresholds = SoilThresholds(float(th.get("dry_below", 30.0)),
                                    float(th.get("wet_above", 70.0)))
    cfg.suppress_refresh_s = float((raw.get("suppress") or {}).get("refresh_s", 30.0))
    reflex = raw.get("reflex", {})
    cfg.reflex_enabled = bool(reflex.get("enabled", True))
    cfg.reflex_d_safe = float(reflex.get("d_safe", 0.5))
    cfg.reflex_sector_deg = float(reflex.get("sector_deg", 90.0))
    motion = raw.get("motion", {})
    cfg.motion = MotionParams(
        v_max=float(motion.get("v_max", 0.3)),
        cruise_speed=float(motion.get("cruise_speed", 0.3)),
        turn_speed=float(motion.get("turn_speed", 0.1)),
        track_width=float(motion.get("track_width", 0.4)),
        max_duration=float(motion.get("max_duration", 5.0)),
    )
    cfg.console_bind = (raw.get("console") or {}).get("bind")
    cfg.pose_log_interval_s = float(raw.get("pose_log_interval_s", 1.0))
    for edge in raw.get("routes", []) or []:
        cfg.extra_routes.append((str(edge["topic"]), str(edge["subscriber"])))
    return cfg


def default_prompt_paths() -> dict[str, str]:
    return {role: data_path("prompts", f"{role}.txt")
            for role in ("sensor", "vision", "chat", "action1", "action2")}


def validate_config(cfg: RunConfig) -> list[str]:
    """Collect human-readable problems; empty list means runnable."""
    problems: list[str] = []
    if cfg.tick_ms <= 0:
        problems.append(f"tick_ms must be positive, got {cfg.tick_ms}")
    for role, value in cfg.history.items():
        if value < 0:
            problems.append(f"history capacity for {role} must be >= 0, got {value}")
    if not os.path.exists(cfg.scenario_path):
        problems.append(f"scenario file not found: {cfg.scenario_path}")
    else:
        try:
            load_scenario(cfg.scenario_path)
        except ConfigError as e:
            problems.append(str(e))
    prompts = dict(default_prompt_paths())
    prompts.update(cfg.prompt_paths)
    for role, p in prompts.items():
        if not os.path.exists(p):
            problems.append(f"prompt file for {role} not found: {p}")
    if cfg.backend.kind == "scripted":
        if cfg.backend.script and not os.path.exists(cfg.backend.script):
            problems.append(f"backend script not found: {cfg.backend.script}")
    log_dir = os.path.dirname(os.path.abspath(cfg.log_path)) or "."
    if not os.path.isdir(log_dir):
        problems.append(f"log directory does not exist: {log_dir}")
    if cfg.console_bind is not None and ":" not in cfg.console_bind:
        problems.append(f"console bind must be HOST:PORT, got {cfg.console_bind!r}")
    return problems
