"""Driving runs from JSON configs.

Configs are validated strictly (unknown keys are errors), can carry a sweep
block, and write a CSV plus a JSON summary. The same files run from the
shell with ``rydgate run cfg.json`` or ``python3 -m rydgate run cfg.json``.
"""

import json
import tempfile
from pathlib import Path

from rydgate.experiments import ExperimentConfig, check, run_config

raw = {
    "name": "dressing-sweep",
    "description": "Constant resonant dressing, V0 swept",
    "model": "ryd4",
    "units": "MHz-over-2pi",
    "stages": {"dipole": [0.0, 60.0]},
    "envelopes": {"microwave": {"kind": "Constant", "value": 10.0}},
    "parameters": {"V0": 0.0},
    "sweep": {"axes": {"parameters.V0": [0.0, 2.0, 4.0, 6.0]}, "evaluator": "propagate"},
}

# a typo is caught before anything runs
bad = dict(raw, paramters={"V0": 1.0})
print("errors:", check(bad)[0])

with tempfile.TemporaryDirectory() as tmp:
    summary = run_config(ExperimentConfig.from_dict(raw), tmp)
    print("\nwritten:", summary["files"])
    print(Path(tmp, "dressing-sweep.csv").read_text().splitlines()[0])
    for v, p in zip(summary["sweep"]["axes"]["parameters.V0"], summary["sweep"]["outputs"]["final_P_rSrS"]):
        print(f"V0 = {v:4.1f} MHz  ->  final P_rSrS = {p:.4f}")
    echo = json.loads(Path(tmp, "dressing-sweep.json").read_text())["config"]
    print("\nsummary echoes the config in", echo["units"])
