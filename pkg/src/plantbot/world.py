"""Deterministic soil, robot, and scene simulation.

The world owns everything the agents are grounded in: a soil column whose
moisture decays exponentially and rises with watering, a tracked robot
integrated with the exact differential-drive kinematics, circle and wall
obstacles inside a rectangular arena, a ray-cast LiDAR, and a camera
surrogate that reports visible entities with bearings and distances.

All randomness (pH/EC/nutrient drift) flows from one seeded generator, so
a given seed and command sequence reproduces the same trajectory bit for
bit. Collisions stop motion at the contact point and raise a flag rather
than letting the body tunnel through geometry.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .actions import MotorCommand

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


@dataclass
class SoilState:
    moisture: float = 55.0      # percent, 0-100
    temperature: float = 22.0   # Celsius
    ph: float = 6.5             # 0-14
    ec: float = 1.2             # mS/cm, >= 0
    n: float = 50.0             # mg/kg
    p: float = 40.0             # mg/kg
    k: float = 45.0             # mg/kg

    def clamped(self) -> "SoilState":
        return SoilState(
            moisture=min(100.0, max(0.0, self.moisture)),
            temperature=self.temperature,
            ph=min(14.0, max(0.0, self.ph)),
            ec=max(0.0, self.ec),
            n=max(0.0, self.n),
            p=max(0.0, self.p),
            k=max(0.0, self.k),
        )


@dataclass(frozen=True)
class SoilParams:
    decay_per_min: float = 0.01       # exponential moisture decay rate
    water_gain_per_l: float = 20.0    # moisture percent added per liter
    temp_base: float = 22.0
    temp_amplitude: float = 3.0       # diurnal swing, Celsius
    ph_drift_per_min: float = 0.005
    ec_drift_per_min: float = 0.005
    npk_drift_per_min: float = 0.05


def soil_step(soil: SoilState, dt_s: float, watering_l: float = 0.0,
              params: SoilParams = SoilParams(), rng: random.Random | None = None,
              t_s: float = 0.0) -> SoilState:
    """Advance the soil by dt seconds; dt=0 with no watering is the identity."""
    if dt_s < 0 or watering_l < 0:
        raise ValueError("dt and watering must be >= 0")
    if dt_s == 0 and watering_l == 0:
        return replace(soil)
    dt_min = dt_s / 60.0
    moisture = soil.moisture * math.exp(-params.decay_per_min * dt_min)
    moisture += params.water_gain_per_l * watering_l
    day_phase = TWO_PI * ((t_s + dt_s) % 86400.0) / 86400.0
    temperature = params.temp_base + params.temp_amplitude * math.sin(day_phase)
    out = SoilState(moisture=moisture, temperature=temperature,
                    ph=soil.ph, ec=soil.ec, n=soil.n, p=soil.p, k=soil.k)
    if rng is not None and dt_min > 0:
        out.ph += rng.uniform(-1, 1) * params.ph_drift_per_min * dt_min
        out.ec += rng.uniform(-1, 1) * params.ec_drift_per_min * dt_min
        out.n += rng.uniform(-1, 1) * params.npk_drift_per_min * dt_min
        out.p += rng.uniform(-1, 1) * params.npk_drift_per_min * dt_min
        out.k += rng.uniform(-1, 1) * params.npk_drift_per_min * dt_min
    return out.clamped()


@dataclass
class RobotPose:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0  # radians, (-pi, pi], 0 along +x

    def normalized(self) -> "RobotPose":
        return RobotPose(self.x, self.y, normalize_angle(self.heading))


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    r: float


@dataclass(frozen=True)
class Wall:
    x1: float
    y1: float
    x2: float
    y2: float


@dataclass
class Entity:
    """Scripted scenario object (e.g. a visitor) with an active window."""

    kind: str  # person | landmark
    x: float
    y: float
    appear_s: float = 0.0
    disappear_s: float = math.inf

    def active(self, t_s: float) -> bool:
        return self.appear_s <= t_s < self.disappear_s


@dataclass(frozen=True)
class LidarScan:
    """Ranges in meters; ray i points at heading + i * (360/R) degrees CCW."""

    ranges: tuple[float, ...]
    max_range: float

    def min_range(self) -> float:
        return min(self.ranges) if self.ranges else self.max_range


@dataclass(frozen=True)
class SceneEntity:
    kind: str
    bearing_deg: float
    distance: float


@dataclass(frozen=True)
class SceneObservation:
    entities: tuple[SceneEntity, ...]
    free_sectors: dict[str, bool]  # left / front / right


def _ray_circle(px: float, py: float, dx: float, dy: float, c: Circle) -> float | None:
    """Smallest t > 0 with |p + t*d - center| = r (d is a unit vector)."""
    ox, oy = px - c.x, py - c.y
    b = 2.0 * (dx * ox + dy * oy)
    cc = ox * ox + oy * oy - c.r * c.r
    disc = b * b - 4.0 * cc
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    t1 = (-b - sq) / 2.0
    t2 = (-b + sq) / 2.0
    for t in (t1, t2):
        if t > 1e-9:
            return t
    return None


def _ray_segment(px: float, py: float, dx: float, dy: float, w: Wall) -> float | None:
    """Smallest t > 0 where p + t*d crosses the segment, else None."""
    ex, ey = w.x2 - w.x1, w.y2 - w.y1
    denom = dx * ey - dy * ex
    if abs(denom) < 1e-12:
        return None
    qx, qy = w.x1 - px, w.y1 - py
    t = (qx * ey - qy * ex) / denom
    u = (qx * dy - qy * dx) / denom
    if t > 1e-9 and -1e-12 <= u <= 1.0 + 1e-12:
        return t
    return None


@dataclass
class WorldConfig:
    bounds: tuple[float, float, float, float] | None = (-5.0, -5.0, 5.0, 5.0)
    track_width: float = 0.4
    robot_radius: float = 0.2
    lidar_rays: int = 72
    lidar_max_range: float = 10.0
    fov_deg: float = 120.0
    vision_max_distance: float = 8.0
    free_space_threshold: float = 1.0
    soil: SoilParams = field(default_factory=SoilParams)


class World:
    """Single-owner simulation state; agents only see snapshots."""

    def __init__(self, config: WorldConfig | None = None, seed: int = 0,
                 pose: RobotPose | None = None, soil: SoilState | None = None):
        self.config = config or WorldConfig()
        self.rng = random.Random(seed)
        self.seed = seed
        self.pose = (pose or RobotPose()).normalized()
        self.soil = (soil or SoilState()).clamped()
        self.obstacles: list[Circle] = []
        self.walls: list[Wall] = []
        self.entities: list[Entity] = []
        self.sim_time = 0.0
        self.pending_water_l = 0.0
        self.collided = False
        self.collision_count = 0
        self.events: list[tuple[float, str]] = []

    # -- geometry ---------------------------------------------------------

    def _bound_walls(self) -> list[Wall]:
        if self.config.bounds is None:
            return []
        x0, y0, x1, y1 = self.config.bounds
        return [
            Wall(x0, y0, x1, y0),
            Wall(x1, y0, x1, y1),
            Wall(x1, y1, x0, y1),
            Wall(x0, y1, x0, y0),
        ]

    def all_walls(self) -> list[Wall]:
        return self.walls + self._bound_walls()

    def _point_blocked(self, x: float, y: float) -> bool:
        rr = self.config.robot_radius
        for c in self.obstacles:
            if math.hypot(x - c.x, y - c.y) < c.r + rr:
                return True
        for w in self.all_walls():
            if _point_segment_distance(x, y, w) < rr:
                return True
        return False

    def min_obstacle_distance(self, x: float | None = None, y: float | None = None) -> float:
        """Distance from the robot center to the nearest obstacle surface."""
        px = self.pose.x if x is None else x
        py = self.pose.y if y is None else y
        best = math.inf
        for c in self.obstacles:
            best = min(best, math.hypot(px - c.x, py - c.y) - c.r)
        for w in self.all_walls():
            best = min(best, _point_segment_distance(px, py, w))
        return best

    # -- actuation --------------------------------------------------------

    def step_robot(self, cmd: MotorCommand, dt: float) -> bool:
        """Integrate motion over dt; returns True if a collision occurred."""
        if dt <= 0:
            raise ValueError("dt must be > 0")
        v = (cmd.left + cmd.right) / 2.0
        omega = (cmd.right - cmd.left) / self.config.track_width
        collided = False
        if abs(v) < 1e-12:
            # Pure rotation never changes position, so it cannot collide.
            self.pose.heading = normalize_angle(self.pose.heading + omega * dt)
        else:
            t_free = self._free_time(v, omega, dt)
            self._integrate(v, omega, t_free)
            if t_free < dt:
                collided = True
                self.collided = True
                self.collision_count += 1
                self.events.append((self.sim_time, "collision"))
        return collided

    def _integrate(self, v: float, omega: float, dt: float) -> None:
        x, y, h = self.pose.x, self.pose.y, self.pose.heading
        if abs(omega) < 1e-9:
            x += v * math.cos(h) * dt
            y += v * math.sin(h) * dt
        else:
            x += (v / omega) * (math.sin(h + omega * dt) - math.sin(h))
            y -= (v / omega) * (math.cos(h + omega * dt) - math.cos(h))
            h = h + omega * dt
        self.pose = RobotPose(x, y, normalize_angle(h))

    def _position_at(self, v: float, omega: float, t: float) -> tuple[float, float]:
        x, y, h = self.pose.x, self.pose.y, self.pose.heading
        if abs(omega) < 1e-9:
            return x + v * math.cos(h) * t, y + v * math.sin(h) * t
        return (x + (v / omega) * (math.sin(h + omega * t) - math.sin(h)),
                y - (v / omega) * (math.cos(h + omega * t) - math.cos(h)))

    def _free_time(self, v: float, omega: float, dt: float) -> float:
        """Largest t in [0, dt] the body can travel before contact (bisected)."""
        step = min(0.01 / max(abs(v), 1e-9), dt)  # ~1 cm spatial resolution
        t = 0.0
        while t < dt:
            t_next = min(t + step, dt)
            px, py = self._position_at(v, omega, t_next)
            if self._point_blocked(px, py):
                lo, hi = t, t_next
                for _ in range(40):
                    mid = (lo + hi) / 2.0
                    px, py = self._position_at(v, omega, mid)
                    if self._point_blocked(px, py):
                        hi = mid
                    else:
                        lo = mid
                return lo
            t = t_next
        return dt

    # -- sensing ----------------------------------------------------------

    def lidar_scan(self) -> LidarScan:
        cfg = self.config
        ranges = []
        for i in range(cfg.lidar_rays):
            ang = self.pose.heading + TWO_PI * i / cfg.lidar_rays
            dx, dy = math.cos(ang), math.sin(ang)
            best = cfg.lidar_max_range
            for c in self.obstacles:
                t = _ray_circle(self.pose.x, self.pose.y, dx, dy, c)
                if t is not None and t < best:
                    best = t
            for w in self.all_walls():
                t = _ray_segment(self.pose.x, self.pose.y, dx, dy, w)
                if t is not None and t < best:
                    best = t
            ranges.append(max(best, 1e-9))
        return LidarScan(tuple(ranges), cfg.lidar_max_range)

    def observe_scene(self, entities: list[Entity] | None = None) -> SceneObservation:
        """Entities and obstacles within the field of view, nearest first."""
        cfg = self.config
        candidates: list[SceneEntity] = []
        pool = entities if entities is not None else [
            e for e in self.entities if e.active(self.sim_time)
        ]
        for e in pool:
            se = self._scene_entity(e.kind, e.x, e.y)
            if se is not None:
                candidates.append(se)
        for c in self.obstacles:
            se = self._scene_entity("obstacle", c.x, c.y)
            if se is not None:
                candidates.append(se)
        candidates.sort(key=lambda s: s.distance)
        scan = self.lidar_scan()
        third = cfg.fov_deg / 3.0
        free = {
            "left": self._sector_free(scan, third / 2.0, cfg.fov_deg / 2.0),
            "front": self._sector_free(scan, -third / 2.0, third / 2.0),
            "right": self._sector_free(scan, -cfg.fov_deg / 2.0, -third / 2.0),
        }
        return SceneObservation(tuple(candidates), free)

    def _scene_entity(self, kind: str, ex: float, ey: float) -> SceneEntity | None:
        cfg = self.config
        dx, dy = ex - self.pose.x, ey - self.pose.y
        distance = math.hypot(dx, dy)
        if distance > cfg.vision_max_distance:
            return None
        bearing = math.degrees(normalize_angle(math.atan2(dy, dx) - self.pose.heading))
        if abs(bearing) > cfg.fov_deg / 2.0:
            return None
        return SceneEntity(kind, round(bearing, 1), round(distance, 2))

    def _sector_free(self, scan: LidarScan, lo_deg: float, hi_deg: float) -> bool:
        n = len(scan.ranges)
        picked = []
        for i in range(n):
            bearing = (360.0 * i / n + 180.0) % 360.0 - 180.0
            if lo_deg <= bearing <= hi_deg:
                picked.append(scan.ranges[i])
        if not picked:
            return True
        return min(picked) >= self.config.free_space_threshold

    # -- environment ------------------------------------------------------

    def apply_water_event(self, liters: float) -> None:
        if liters <= 0:
            raise ValueError("watering must be > 0")
        self.pending_water_l += liters
        self.events.append((self.sim_time, f"water {liters:.4f} L"))

    def set_soil_moisture(self, value: float) -> None:
        self.soil.moisture = min(100.0, max(0.0, float(value)))
        self.events.append((self.sim_time, f"set moisture {self.soil.moisture:.1f}"))

    def add_obstacle(self, circle: Circle) -> None:
        self.obstacles.append(circle)
        self.events.append((self.sim_time, f"obstacle ({circle.x:.2f},{circle.y:.2f}) r={circle.r:.2f}"))

    def step(self, dt: float) -> None:
        """Advance soil and the clock; watering accumulated since the last
        step is absorbed here. Motion is driven separately via step_robot."""
        if dt < 0:
            raise ValueError("dt must be >= 0")
        water = self.pending_water_l
        self.pending_water_l = 0.0
        self.soil = soil_step(self.soil, dt, water, self.config.soil, self.rng, self.sim_time)
        self.sim_time += dt


def _point_segment_distance(px: float, py: float, w: Wall) -> float:
    ex, ey = w.x2 - w.x1, w.y2 - w.y1
    length_sq = ex * ex + ey * ey
    if length_sq < 1e-18:
        return math.hypot(px - w.x1, py - w.y1)
    t = ((px - w.x1) * ex + (py - w.y1) * ey) / length_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (w.x1 + t * ex), py - (w.y1 + t * ey))


def step_robot(world: World, cmd: MotorCommand, dt: float) -> bool:
    return world.step_robot(cmd, dt)


def lidar_scan(world: World) -> LidarScan:
    return world.lidar_scan()


def observe_scene(world: World, entities: list[Entity] | None = None) -> SceneObservation:
    return world.observe_scene(entities)


def apply_water_event(world: World, liters: float) -> None:
    world.apply_water_event(liters)
