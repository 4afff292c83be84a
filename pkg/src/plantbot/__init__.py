"""Plant/robot hybrid agent network.

A desk-scale, fully simulated rebuild of a plant-robot hybrid: five role
agents (sensor, vision, chat, and a two-stage action stack) exchange
natural-language messages over a pub/sub bus with an OSC 1.0 wire format,
grounded in a deterministic soil/robot/LiDAR world, with an operator
console and an analysis CLI for the resulting behavior logs.
"""

from .actions import (Decision, DirectiveGate, MotionParams, MotorCommand,
                      ParseError, VerbCommand, parse_decision,
                      parse_motor_command, reflex_avoid, suppress_redundant,
                      to_motor)
from .backends import (BackendUnavailable, ChatTurn, CompletionRequest,
                       HttpBackend, ScriptRule, ScriptedBackend, load_script)
from .bus import Envelope, MessageBus, RouteTable, bridge_osc, default_routes
from .clock import SimClock
from .osc import (Endpoint, EndpointConfig, OscDecodeError, OscEncodeError,
                  OscMessage, decode_message, encode_message, open_endpoint)
from .runtime import Agent, AgentSpec, HistoryBuffer, build_prompt, history_append
from .roles import (RoleConfig, RolePromptSet, SoilThresholds,
                    format_chat_input, format_sensor_input,
                    format_vision_input, wire_agents)
from .telemetry import (LogRecord, LogWriter, Recorder, export_corpus,
                        load_records, pre_transition_terms, run_lengths,
                        state_counts, term_frequency)
from .world import (Circle, Entity, LidarScan, RobotPose, SceneObservation,
                    SoilParams, SoilState, Wall, World, WorldConfig, soil_step)

__version__ = "0.1.0"
