"""Run the shipped example scenario headless, then analyze its log.

Reproduces the full pipeline: scripted agents over the bus, a drying and
re-watered soil, visitors entering the camera view, and the statistics the
analysis CLI computes from the resulting behavior log.
"""

import tempfile
from pathlib import Path

from plantbot.config import data_path, load_config
from plantbot.gateway import Runner
from plantbot.telemetry import (load_records, pre_transition_terms,
                                run_lengths, state_counts, term_frequency)

workdir = Path(tempfile.mkdtemp(prefix="plantbot-demo-"))
cfg = load_config(data_path("configs", "examples.yaml"))
cfg.log_path = str(workdir / "examples.jsonl")

Runner(cfg).run(headless=True)
records, _ = load_records(cfg.log_path)
print(f"run wrote {len(records)} records to {cfg.log_path}\n")

print("decision states:", state_counts(records))
print("run lengths:", run_lengths(records))

print("\ntop chat terms:")
for term, count in term_frequency(records, "chat", top_k=8):
    print(f"  {term:12s} {count}")

print("\nchat terms immediately before MOVE transitions:")
for term, count in pre_transition_terms(records, "move", top_k=8):
    print(f"  {term:12s} {count}")

print("\nchat terms immediately before STOP transitions:")
for term, count in pre_transition_terms(records, "stop", top_k=8):
    print(f"  {term:12s} {count}")
