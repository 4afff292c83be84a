"""Turn free-text model output into structured motion.

Two layers of parsing: action agent 1 prefixes its output with ``[0]``
(stay) or ``[1]`` (move); action agent 2 emits a ``CMD: <verb> [<magnitude>]``
line, with a case-insensitive keyword scan as fallback for off-grammar
text. Parsed verbs become differential-drive track speeds, every output is
clamped to the speed and duration envelope, and a LiDAR-gated reflex
replaces forward motion with an in-place turn away from nearby obstacles.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

VERBS = ("forward", "backward", "turn_left", "turn_right", "stop")

TRANSLATION_VERBS = ("forward", "backward")
ROTATION_VERBS = ("turn_left", "turn_right")

# Fallback keyword table, scanned in this priority order.
KEYWORDS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("stop", ("stop", "halt", "stay", "remain stationary")),
    ("backward", ("backward", "backwards", "back up", "reverse", "retreat")),
    ("turn_left", ("turn left", "leftward", "left")),
    ("turn_right", ("turn right", "rightward", "right")),
    ("forward", ("forward", "ahead", "straight", "approach", "closer", "move")),
)

CMD_RE = re.compile(r"CMD:\s*([A-Za-z_]+)(?:[ \t]+(\S+))?", re.IGNORECASE)
DECISION_RE = re.compile(r"^\s*\[([01])\]\s*(.*)", re.DOTALL)


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Decision:
    move: bool
    reason: str = ""


@dataclass(frozen=True)
class VerbCommand:
    verb: str
    magnitude: float | None = None  # meters (translation) or degrees (rotation)

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ValueError(f"unknown verb {self.verb!r}")
        if self.verb == "stop" and self.magnitude is not None:
            raise ValueError("stop takes no magnitude")
        if self.magnitude is not None and self.magnitude <= 0:
            raise ValueError("magnitude must be > 0")


@dataclass(frozen=True)
class MotorCommand:
    left: float   # track speed, m/s
    right: float  # track speed, m/s
    duration: float  # seconds

    @property
    def is_forward(self) -> bool:
        return (self.left + self.right) / 2.0 > 1e-12

    @property
    def is_motion(self) -> bool:
        return abs(self.left) > 1e-12 or abs(self.right) > 1e-12


@dataclass(frozen=True)
class MotionParams:
    v_max: float = 0.3           # hard speed ceiling, m/s
    cruise_speed: float = 0.3    # translation speed, m/s
    turn_speed: float = 0.1      # per-track speed while rotating, m/s
    track_width: float = 0.4     # m
    max_duration: float = 5.0    # s
    min_duration: float = 0.1    # s, used for stop commands
    default_translation_m: float = 0.3
    default_rotation_deg: float = 45.0


def parse_decision(text: str) -> Decision:
    """Read the leading [0]/[1] tag; the rest of the text is the reason."""
    m = DECISION_RE.match(text or "")
    if not m:
        raise ParseError(f"no leading [0]/[1] tag in {text!r}")
    return Decision(move=m.group(1) == "1", reason=m.group(2).strip())


def render_decision(d: Decision) -> str:
    return f"[{1 if d.move else 0}] {d.reason}".rstrip()


def parse_motor_command(text: str) -> VerbCommand:
    """Parse ``CMD: <verb> [<magnitude>]``, else fall back to keyword scan."""
    m = CMD_RE.search(text or "")
    if m:
        verb = m.group(1).lower()
        if verb not in VERBS:
            raise ParseError(f"unknown verb {verb!r} in CMD line")
        magnitude = None
        if m.group(2) is not None:
            try:
                magnitude = float(m.group(2))
            except ValueError:
                raise ParseError(f"magnitude {m.group(2)!r} is not numeric") from None
            if magnitude <= 0:
                raise ParseError(f"magnitude {magnitude} must be > 0")
            if verb == "stop":
                magnitude = None
        return VerbCommand(verb, magnitude)
    lowered = (text or "").lower()
    for verb, words in KEYWORDS:
        if any(w in lowered for w in words):
            return VerbCommand(verb, None)
    raise ParseError(f"no motor command found in {text!r}")


def _clamp(value: float, limit: float) -> float:
    return max(-limit, min(limit, value))


def to_motor(vc: VerbCommand, params: MotionParams = MotionParams()) -> MotorCommand:
    """Map a verb to clamped track speeds and a duration.

    Translation duration is distance/speed; rotation duration comes from
    the differential-drive rate w = (right - left) / track_width.
    """
    if vc.verb == "stop":
        return MotorCommand(0.0, 0.0, params.min_duration)
    if vc.verb in TRANSLATION_VERBS:
        speed = _clamp(params.cruise_speed, params.v_max)
        distance = vc.magnitude if vc.magnitude is not None else params.default_translation_m
        sign = 1.0 if vc.verb == "forward" else -1.0
        duration = distance / speed if speed > 0 else params.min_duration
        return MotorCommand(sign * speed, sign * speed,
                            min(max(duration, params.min_duration), params.max_duration))
    speed = _clamp(params.turn_speed, params.v_max)
    angle_deg = vc.magnitude if vc.magnitude is not None else params.default_rotation_deg
    omega = 2.0 * speed / params.track_width  # (right - left) / W with right = -left
    duration = math.radians(angle_deg) / omega if omega > 0 else params.min_duration
    duration = min(max(duration, params.min_duration), params.max_duration)
    if vc.verb == "turn_left":
        return MotorCommand(-speed, speed, duration)
    return MotorCommand(speed, -speed, duration)


def suppress_redundant(new: Decision, last_emitted: Decision | None,
                       elapsed_s: float | None = None,
                       refresh_s: float = 30.0) -> bool:
    """Emit only on the first decision, a flag change, or a stale refresh."""
    if last_emitted is None:
        return True
    if new.move != last_emitted.move:
        return True
    return elapsed_s is not None and elapsed_s >= refresh_s


class DirectiveGate:
    """Per-agent suppression state: last emitted decision and its time."""

    def __init__(self, clock, refresh_s: float = 30.0):
        self.clock = clock
        self.refresh_s = refresh_s
        self.last_emitted: Decision | None = None
        self.last_emitted_s: float | None = None
        self.latest: Decision | None = None

    def should_emit(self, decision: Decision) -> bool:
        self.latest = decision
        elapsed = (None if self.last_emitted_s is None
                   else self.clock.now_s - self.last_emitted_s)
        if suppress_redundant(decision, self.last_emitted, elapsed, self.refresh_s):
            self.last_emitted = decision
            self.last_emitted_s = self.clock.now_s
            return True
        return False


def _sector_indices(n_rays: int, lo_deg: float, hi_deg: float) -> list[int]:
    """Ray indices whose bearing (deg, CCW from heading, in (-180,180]) is in [lo, hi]."""
    picked = []
    for i in range(n_rays):
        bearing = (360.0 * i / n_rays + 180.0) % 360.0 - 180.0
        if lo_deg <= bearing <= hi_deg:
            picked.append(i)
    return picked


def reflex_avoid(cmd: MotorCommand, scan, d_safe: float = 0.5,
                 sector_deg: float = 90.0) -> MotorCommand:
    """Replace forward motion with a turn away from close obstacles.

    Triggers when the command has forward motion and any range within the
    front sector (plus/minus ``sector_deg``) is under ``d_safe``; the
    replacement rotates in place toward the side with the larger mean
    clearance. Non-forward commands pass through unchanged. The default
    sector spans the forward half-plane, the widest cone a translation step
    can shrink distances in; narrower sectors miss oblique approaches.
    """
    if not cmd.is_forward:
        return cmd
    ranges = list(scan.ranges)
    n = len(ranges)
    if n == 0:
        return cmd
    front = _sector_indices(n, -sector_deg, sector_deg)
    if not front or min(ranges[i] for i in front) >= d_safe:
        return cmd
    left_idx = _sector_indices(n, 1e-9, 90.0)
    right_idx = _sector_indices(n, -90.0, -1e-9)
    left_clear = sum(ranges[i] for i in left_idx) / len(left_idx) if left_idx else 0.0
    right_clear = sum(ranges[i] for i in right_idx) / len(right_idx) if right_idx else 0.0
    speed = max((abs(cmd.left) + abs(cmd.right)) / 2.0, 0.05)
    if left_clear >= right_clear:
        return MotorCommand(-speed, speed, cmd.duration)
    return MotorCommand(speed, -speed, cmd.duration)
