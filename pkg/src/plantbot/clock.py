"""Simulated clock shared by the bus, agents, and world.

All timestamps in envelopes and log records come from this clock, so a
headless run advancing it in fixed ticks is fully reproducible. Interactive
runs pace the same tick loop against wall time; the clock itself never
reads the system time.
"""

from __future__ import annotations


class SimClock:
    def __init__(self, start_s: float = 0.0):
        self._t = float(start_s)

    @property
    def now_s(self) -> float:
        return self._t

    @property
    def now_ms(self) -> int:
        return int(round(self._t * 1000))

    def advance(self, dt_s: float) -> None:
        if dt_s < 0:
            raise ValueError("clock cannot run backwards")
        self._t += dt_s
