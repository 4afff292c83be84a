"""Serve an interactive run for the operator console.

Starts the example scenario with the console listening on localhost:8765
and paces the simulation against wall time. Talk to it with the web
console (see frontend/), or by hand:

    printf '{"cmd":"user_utterance","text":"hello"}\n' | nc 127.0.0.1 8765

Commands: user_utterance, set_soil_moisture, water, add_obstacle,
pause, resume. Stop with Ctrl+C.
"""

from plantbot.config import data_path, load_config
from plantbot.gateway import Runner

cfg = load_config(data_path("configs", "examples.yaml"))
cfg.log_path = "plantbot-live.jsonl"
cfg.duration_s = None
cfg.console_bind = "127.0.0.1:8765"

runner = Runner(cfg)
host, port = runner.console.address
print(f"console listening on {host}:{port}; Ctrl+C to stop")
runner.run(duration_s=None, headless=False)
