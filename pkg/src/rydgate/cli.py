"""Command-line front end.

    rydgate run <config.json> [--out DIR]
    rydgate preset <name> [--out DIR]
    rydgate list
    rydgate validate <config.json>

The output directory is taken from ``--out``, then ``$RYDGATE_OUTPUT_DIR``,
then the config's ``output.dir``. Exit codes: 0 success, 2 invalid config,
3 numerical failure. Failures print a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from .dynamics import IntegrationError, NonFiniteHamiltonianError, NonHermitianError
from .experiments import ConfigError, ExperimentConfig, check, load_json, run_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def preset_names() -> list[str]:
    root = resources.files("rydgate") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def preset_path(name: str):
    path = resources.files("rydgate") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    return path


def list_presets() -> list[tuple[str, str]]:
    """``(name, one-line description)`` for every bundled preset."""
    out = []
    for name in preset_names():
        raw = load_json(preset_path(name))
        out.append((name, raw.get("description", "").split(". ")[0]))
    return out


def load_preset(name: str) -> ExperimentConfig:
    with resources.as_file(preset_path(name)) as p:
        return ExperimentConfig.load(p)


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": {"type": kind, "message": message, **extra}}), file=sys.stderr)
    return code


def _run(cfg: ExperimentConfig, out) -> int:
    try:
        summary = run_config(cfg, out)
    except (IntegrationError, NonHermitianError, NonFiniteHamiltonianError, FloatingPointError, ArithmeticError) as exc:
        return _fail("numerical-failure", str(exc), EXIT_NUMERICAL)
    except ConfigError as exc:
        return _fail("invalid-config", str(exc), EXIT_CONFIG, errors=exc.errors)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    key = "report" if "report" in summary else "results" if "results" in summary else None
    if key:
        print(json.dumps({cfg.name: summary[key]}, default=float))
    else:
        print(json.dumps({cfg.name: {"points": len(summary["sweep"]["errors"]) or "all ok", "files": summary["files"]}}))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rydgate", description="Rydberg-ion gate simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_pre = sub.add_parser("preset", help="run a bundled preset")
    p_pre.add_argument("name")
    p_pre.add_argument("--out", default=None, help="output directory")
    sub.add_parser("list", help="list bundled presets")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    if args.command == "list":
        for name, desc in list_presets():
            print(f"{name:18s} {desc}")
        return EXIT_OK
    if args.command == "validate":
        try:
            raw = load_json(args.config)
        except ConfigError as exc:
            print(json.dumps({"errors": exc.errors, "warnings": []}, indent=2))
            return EXIT_CONFIG
        errors, warnings = check(raw)
        print(json.dumps({"errors": errors, "warnings": warnings}, indent=2))
        return EXIT_CONFIG if errors else EXIT_OK
    try:
        cfg = load_preset(args.name) if args.command == "preset" else ExperimentConfig.load(args.config)
    except ConfigError as exc:
        return _fail("invalid-config", str(exc), EXIT_CONFIG, errors=exc.errors)
    return _run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
