import socket

import pytest

from plantbot.config import data_path, load_config
from plantbot.gateway import Runner
from plantbot.telemetry import load_records


def free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def free_tcp_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture
def builtin_config():
    def _load(name: str, log_path: str, **overrides):
        cfg = load_config(data_path("configs", f"{name}.yaml"))
        cfg.log_path = str(log_path)
        for key, value in overrides.items():
            setattr(cfg, key, value)
        return cfg
    return _load


@pytest.fixture
def run_builtin(builtin_config, tmp_path):
    """Run a shipped config headless; returns (records, log_path, runner)."""
    def _run(name: str, duration_s: float | None = None, **overrides):
        log = tmp_path / f"{name}.jsonl"
        cfg = builtin_config(name, log, **overrides)
        runner = Runner(cfg)
        runner.run(duration_s, headless=True)
        records, malformed = load_records(str(log))
        assert malformed == 0
        return records, log, runner
    return _run
