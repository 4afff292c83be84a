"""Decision/motor parsing, suppression, and the reflex override."""

import math

import pytest
from hypothesis import given, strategies as st

from plantbot.actions import (Decision, DirectiveGate, MotionParams,
                              MotorCommand, ParseError, VerbCommand,
                              parse_decision, parse_motor_command,
                              reflex_avoid, render_decision,
                              suppress_redundant, to_motor)
from plantbot.clock import SimClock


class TestParseDecision:
    def test_move_with_reason(self):
        d = parse_decision("[1] I should move to absorb more moisture in this humidity.")
        assert d.move is True
        assert d.reason == "I should move to absorb more moisture in this humidity."

    def test_stop_with_reason(self):
        d = parse_decision("[0] Reason: The conversation is still ongoing, and I do "
                           "not feel the need to move yet.")
        assert d.move is False
        assert d.reason.startswith("Reason: The conversation")

    def test_no_tag_raises(self):
        with pytest.raises(ParseError):
            parse_decision("let's go")

    def test_leading_whitespace_accepted(self):
        assert parse_decision("   [1] go").move is True

    def test_empty_reason(self):
        d = parse_decision("[0]")
        assert d.move is False and d.reason == ""

    @given(st.booleans(),
           st.text(max_size=60).map(str.strip).filter(lambda s: "\x00" not in s))
    def test_parse_render_identity(self, move, reason):
        rendered = render_decision(Decision(move, reason))
        parsed = parse_decision(rendered)
        assert parsed.move == move
        assert parsed.reason == reason


class TestParseMotorCommand:
    def test_grammar_forward_with_magnitude(self):
        assert parse_motor_command("CMD: forward 0.5") == VerbCommand("forward", 0.5)

    def test_grammar_stop_after_prose(self):
        assert parse_motor_command("I will stop here. CMD: stop") == VerbCommand("stop")

    def test_keyword_fallback_forward(self):
        assert parse_motor_command("moving ahead slowly") == VerbCommand("forward")

    def test_keyword_priority_stop_beats_forward(self):
        assert parse_motor_command("move forward? no, stop!").verb == "stop"

    def test_keyword_backward_beats_turns(self):
        assert parse_motor_command("back up and turn left").verb == "backward"

    def test_unknown_verb_in_grammar(self):
        with pytest.raises(ParseError):
            parse_motor_command("CMD: sideways 1")

    def test_non_numeric_magnitude(self):
        with pytest.raises(ParseError):
            parse_motor_command("CMD: forward fast")

    def test_non_positive_magnitude(self):
        with pytest.raises(ParseError):
            parse_motor_command("CMD: forward -0.5")
        with pytest.raises(ParseError):
            parse_motor_command("CMD: forward 0")

    def test_no_match_raises(self):
        with pytest.raises(ParseError):
            parse_motor_command("the weather is nice")

    def test_case_insensitive(self):
        assert parse_motor_command("cmd: Turn_Left 90") == VerbCommand("turn_left", 90.0)


class TestToMotor:
    def test_forward_duration_is_distance_over_speed(self):
        params = MotionParams(cruise_speed=0.3, v_max=0.3)
        cmd = to_motor(VerbCommand("forward", 0.3), params)
        assert cmd == MotorCommand(0.3, 0.3, 1.0)

    def test_turn_left_differential_drive_duration(self):
        # omega = (right - left) / W = 0.2 / 0.4 = 0.5 rad/s; 90 deg takes pi/2 / 0.5 s.
        params = MotionParams(turn_speed=0.1, track_width=0.4)
        cmd = to_motor(VerbCommand("turn_left", 90.0), params)
        assert cmd.left == -0.1 and cmd.right == 0.1
        assert cmd.duration == pytest.approx(math.pi / 2 / 0.5, abs=1e-9)

    def test_stop_is_zero_speed_minimal_duration(self):
        cmd = to_motor(VerbCommand("stop"), MotionParams(min_duration=0.1))
        assert cmd.left == 0.0 and cmd.right == 0.0 and cmd.duration == 0.1

    def test_backward_sign(self):
        cmd = to_motor(VerbCommand("backward", 0.3), MotionParams())
        assert cmd.left < 0 and cmd.right < 0

    @given(st.sampled_from(["forward", "backward", "turn_left", "turn_right", "stop"]),
           st.one_of(st.none(), st.floats(min_value=1e-3, max_value=1e6)))
    def test_clamping_is_total(self, verb, magnitude):
        params = MotionParams()
        vc = VerbCommand(verb, None if verb == "stop" else magnitude)
        cmd = to_motor(vc, params)
        assert abs(cmd.left) <= params.v_max + 1e-12
        assert abs(cmd.right) <= params.v_max + 1e-12
        assert 0 < cmd.duration <= params.max_duration


class TestSuppressRedundant:
    def test_first_emission_always_passes(self):
        assert suppress_redundant(Decision(False), None) is True

    def test_same_flag_within_refresh_suppressed(self):
        assert suppress_redundant(Decision(False), Decision(False), 10.0, 30.0) is False

    def test_flag_change_emits(self):
        assert suppress_redundant(Decision(True), Decision(False), 1.0, 30.0) is True

    def test_refresh_interval_elapsed_emits(self):
        assert suppress_redundant(Decision(False), Decision(False), 31.0, 30.0) is True

    def test_gate_tracks_time(self):
        clock = SimClock()
        gate = DirectiveGate(clock, refresh_s=30.0)
        assert gate.should_emit(Decision(False)) is True
        clock.advance(10.0)
        assert gate.should_emit(Decision(False)) is False
        clock.advance(25.0)
        assert gate.should_emit(Decision(False)) is True  # 35 s since emission
        assert gate.should_emit(Decision(True)) is True   # flag change


class FakeScan:
    def __init__(self, ranges):
        self.ranges = list(ranges)


def scan_with(overrides, n=72, default=5.0):
    """Build a scan; overrides maps ray index -> range."""
    ranges = [default] * n
    for idx, value in overrides.items():
        ranges[idx] = value
    return FakeScan(ranges)


def sector_rays(n, lo_deg, hi_deg):
    out = []
    for i in range(n):
        b = (360.0 * i / n + 180.0) % 360.0 - 180.0
        if lo_deg <= b <= hi_deg:
            out.append(i)
    return out


class TestReflexAvoid:
    forward = MotorCommand(0.3, 0.3, 1.0)

    def test_clear_front_passes_through_unchanged(self):
        scan = FakeScan([3.0] * 72)
        assert reflex_avoid(self.forward, scan, 0.5) is self.forward

    def test_obstacle_ahead_rotates_toward_clearer_side(self):
        # Ray 0 blocked at 0.2 m; left half-plane clearly more open than right.
        ranges = [5.0] * 72
        ranges[0] = 0.2
        for i in sector_rays(72, -90.0, -1.0):
            ranges[i] = 1.0  # right side tighter
        cmd = reflex_avoid(MotorCommand(0.3, 0.3, 1.0), FakeScan(ranges), 0.5)
        assert cmd.left < 0 and cmd.right > 0  # in-place turn to the left
        assert cmd.duration == 1.0

    def test_right_side_clearer_turns_right(self):
        ranges = [5.0] * 72
        ranges[0] = 0.2
        for i in sector_rays(72, 1.0, 90.0):
            ranges[i] = 1.0  # left side tighter
        cmd = reflex_avoid(MotorCommand(0.3, 0.3, 1.0), FakeScan(ranges), 0.5)
        assert cmd.left > 0 and cmd.right < 0

    def test_stop_command_passes_through(self):
        stop = MotorCommand(0.0, 0.0, 0.1)
        scan = scan_with({0: 0.1})
        assert reflex_avoid(stop, scan, 0.5) is stop

    def test_backward_command_passes_through(self):
        back = MotorCommand(-0.3, -0.3, 1.0)
        scan = scan_with({0: 0.1})
        assert reflex_avoid(back, scan, 0.5) is back

    def test_oblique_approach_triggers_default_guard(self):
        # Obstacle at ~45 deg within d_safe: outside a narrow cone but inside
        # the default forward half-plane guard.
        idx = sector_rays(72, 44.0, 46.0)[0]
        scan = scan_with({idx: 0.4})
        cmd = reflex_avoid(self.forward, scan, 0.5)
        assert cmd is not self.forward
        assert (cmd.left + cmd.right) / 2.0 == pytest.approx(0.0, abs=1e-12)

    def test_narrow_sector_opt_in_ignores_oblique(self):
        idx = sector_rays(72, 44.0, 46.0)[0]
        scan = scan_with({idx: 0.4})
        assert reflex_avoid(self.forward, scan, 0.5, sector_deg=30.0) is self.forward

    def test_behind_obstacle_never_triggers(self):
        idx = sector_rays(72, 170.0, 180.0)[0]
        scan = scan_with({idx: 0.1})
        assert reflex_avoid(self.forward, scan, 0.5) is self.forward
