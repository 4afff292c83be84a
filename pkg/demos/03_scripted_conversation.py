"""Drive the five-agent network by hand with a scripted backend.

A soil reading enters, the sensor agent verbalizes it, chat integrates it,
action1 decides to move, action2 produces a motor command line, and the
motor driver applies it to the simulated robot.
"""

from plantbot import (MessageBus, SimClock, World, WorldConfig,
                      default_routes, wire_agents)
from plantbot.backends import ScriptedBackend, load_script
from plantbot.config import data_path
from plantbot.roles import RoleConfig, RolePromptSet

prompts = {}
for role in ("sensor", "vision", "chat", "action1", "action2"):
    with open(data_path("prompts", f"{role}.txt"), encoding="utf-8") as fh:
        prompts[role] = fh.read()

rules = load_script(data_path("scripts", "examples.rules"))
base = ScriptedBackend(rules, default="...")
backends = {r: base.for_role(r) for r in prompts}

clock = SimClock()
bus = MessageBus(default_routes(), clock)
world = World(WorldConfig(bounds=(-6, -6, 6, 6)), seed=1)
world.set_soil_moisture(12.0)

transcript = []
bus.add_tap(lambda env: transcript.append(f"{env.source:8s} {env.payload}"))

system = wire_agents(RolePromptSet(prompts), bus, backends, world,
                     config=RoleConfig(sensor_interval_s=1.0, vision_interval_s=900.0))

# Tick the cooperative scheduler for two simulated seconds.
for _ in range(20):
    world.step(0.1)
    clock.advance(0.1)
    system.step(0.1)

print("\n".join(transcript))
print(f"\nrobot pose after the cascade: x={world.pose.x:.2f} m "
      f"(the dry-soil directive made it roll forward)")
