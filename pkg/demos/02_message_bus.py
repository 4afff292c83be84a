"""Route natural-language messages through the agent topology.

The bus routes by topic: sensor and vision reports flow to the chat agent,
chat output fans out to the speaker and both action agents, and the action
chain ends at the world driver. Queues are bounded; a slow consumer loses
the oldest entries, never the freshest.
"""

from plantbot import MessageBus, SimClock, default_routes

bus = MessageBus(default_routes(), SimClock())

# A sensor report reaches exactly one subscriber: the chat agent.
count = bus.send("sensor", "/plantbot/sensor/out", "The soil is dry.")
print(f"sensor report delivered to {count} subscriber(s)")
print(f"chat inbox head: {bus.inbox('chat').pop().payload!r}")

# Chat output fans out to speaker, action1, and action2.
count = bus.send("chat", "/plantbot/chat/out", "Could you water me?")
print(f"chat utterance delivered to {count} subscribers")

# Bounded queues: flood a 3-slot inbox with five messages.
slow = bus.subscribe("slowpoke", "/plantbot/vision/out", bound=3)
for i in range(5):
    bus.send("vision", "/plantbot/vision/out", f"frame {i}")
kept = [env.payload for env in slow]
print(f"slow consumer kept {kept} and dropped {slow.dropped} oldest")

# Wildcard subscriptions observe a whole namespace slice.
monitor = bus.subscribe("monitor", "/plantbot/*/out")
bus.send("action1", "/plantbot/action1/out", "[1] let's move")
bus.send("action2", "/plantbot/action2/out", "CMD: forward 0.3")
print("monitor saw:", [f"{e.source}: {e.payload}" for e in monitor])
