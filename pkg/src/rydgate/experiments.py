"""Experiment configuration: strict JSON parsing, validation, model
construction, the config-driven sweep evaluators and output writers.

A config is a JSON object::

    {
      "name": "fig3-ddp",
      "description": "...",
      "model": "h3" | "h4" | "ryd4" | "full16",
      "units": "MHz-over-2pi" | "rad-per-ns",
      "tolerance": 1e-10,
      "sample_dt": 0.1,
      "span": [t0, t1],
      "initial_state": "0",
      "track": "rS",
      "parameters": {"Delta": 20.0, "V0": 0.0},
      "stages": {"stirap_up": [..], "dipole": [..], "stirap_down": [..]},
      "envelopes": {"pump": {...}, "stokes": {...}, "microwave": {...}, "detuning_rr": {...}},
      "analysis": {"evaluator": "stirap-infidelity", ...},
      "sweep": {"axes": {"parameters.V0": [..]}, "evaluator": "ent-phase", "workers": 1},
      "output": {"dir": "out", "stem": "fig3-ddp"}
    }

Frequencies (``parameters`` and the frequency parameters of envelopes) are
read in the declared units; times are always ns.
"""

from __future__ import annotations

import copy
import csv
import itertools
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_CPR_THRESHOLD,
    DEFAULT_PHASE_THRESHOLD,
    SweepResult,
    cpr_rabi_for_detuning,
    drift_compensated_gate_time,
    entangling_phase,
    find_cpr_time,
    full_gate_report,
    register_evaluator,
)
from .dynamics import PropagationResult, propagate, wrap_phase
from .models import (
    MODEL_NAMES,
    RYDBERG_MANIFOLD,
    SINGLE_ION,
    THREE_LEVEL,
    TWO_ION,
    DressingStage,
    GateSchedule,
    build_full_two_qubit,
    build_h3,
    build_h4,
)
from .pulses import FREQUENCY_PARAMS, Envelope, constant, from_dict, ttl_truncate, zero
from .units import MHZ

UNITS = {"MHz-over-2pi": MHZ, "rad-per-ns": 1.0}
CSV_SCHEMA_VERSION = 1
SUMMARY_SCHEMA_VERSION = 1

TOP_KEYS = {
    "name": True,
    "description": False,
    "model": True,
    "units": True,
    "tolerance": False,
    "sample_dt": False,
    "span": False,
    "initial_state": False,
    "track": False,
    "parameters": False,
    "stages": False,
    "envelopes": True,
    "analysis": False,
    "sweep": False,
    "output": False,
}
PARAMETER_KEYS = ("Delta", "V0")
STAGE_KEYS = ("stirap_up", "dipole", "stirap_down")
ENVELOPE_CHANNELS = {
    "h3": {"pump": True, "stokes": True},
    "h4": {"pump": True, "stokes": True, "microwave": True, "detuning_rr": False},
    "ryd4": {"microwave": True, "detuning_rr": False},
    "full16": {"pump": True, "stokes": True, "microwave": True, "detuning_rr": False},
}
ANALYSIS_KEYS = {
    "evaluator",
    "window",
    "threshold",
    "phase_threshold",
    "gate_time",
    "tie_rabi_to_detuning",
    "drift_reference",
}
SWEEP_KEYS = {"axes", "evaluator", "workers"}
OUTPUT_KEYS = {"dir", "stem"}
SPACES = {"h3": THREE_LEVEL, "h4": SINGLE_ION, "ryd4": RYDBERG_MANIFOLD, "full16": TWO_ION}
DEFAULT_INITIAL = {"h3": "0", "h4": "0", "ryd4": "rSrS", "full16": "00"}
DEFAULT_TRACK = {"h3": "rS", "h4": "rS", "ryd4": "rSrS", "full16": "00"}
MODEL_EVALUATORS = {
    "propagate": MODEL_NAMES,
    "stirap-infidelity": ("h3", "h4"),
    "microwave-distortion": ("h4",),
    "cpr-time": ("ryd4",),
    "ent-phase": ("ryd4",),
    "full-gate": ("full16",),
}


class ConfigError(ValueError):
    """Config failed schema or physics validation."""

    def __init__(self, errors):
        self.errors = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


# ---------------------------------------------------------------------------
# parsing and validation


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _interval(value, what, errors):
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(_is_number(v) for v in value)
    ):
        errors.append(f"{what} must be a [start, end] pair of numbers, got {value!r}")
        return None
    return float(value[0]), float(value[1])


def _walk_envelopes(spec):
    """Yield every envelope dict in a definition tree."""
    if isinstance(spec, list):
        for s in spec:
            yield from _walk_envelopes(s)
    elif isinstance(spec, Mapping):
        yield spec
        if "inner" in spec:
            yield from _walk_envelopes(spec["inner"])
        if "terms" in spec:
            yield from _walk_envelopes(spec["terms"])


def _find_kind(spec, kind):
    for env in _walk_envelopes(spec):
        if env.get("kind") == kind:
            return env
    return None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Parsed and validated experiment.

    ``raw`` is the config exactly as given; :meth:`resolved` returns the
    echo in rad/ns that reproduces the run bit for bit.
    """

    raw: Mapping[str, Any]
    warnings: tuple[str, ...] = ()
    source: str | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], source: str | None = None) -> "ExperimentConfig":
        errors, warnings = check(raw)
        if errors:
            raise ConfigError(errors)
        return cls(copy.deepcopy(dict(raw)), tuple(warnings), source)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        raw = load_json(path)
        return cls.from_dict(raw, str(path))

    # -- accessors -----------------------------------------------------------

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def model(self) -> str:
        return self.raw["model"]

    @property
    def scale(self) -> float:
        return UNITS[self.raw["units"]]

    @property
    def tolerance(self) -> float:
        return float(self.raw.get("tolerance", 1e-10))

    @property
    def sample_dt(self) -> float:
        return float(self.raw.get("sample_dt", 0.1))

    @property
    def space(self):
        return SPACES[self.model]

    @property
    def initial_state(self) -> str:
        return self.raw.get("initial_state", DEFAULT_INITIAL[self.model])

    @property
    def track(self) -> str:
        return self.raw.get("track", DEFAULT_TRACK[self.model])

    @property
    def analysis(self) -> Mapping[str, Any]:
        return self.raw.get("analysis", {"evaluator": "propagate"})

    @property
    def evaluator(self) -> str:
        return self.analysis.get("evaluator", "propagate")

    def parameter(self, key: str) -> float:
        return float(self.raw.get("parameters", {}).get(key, 0.0)) * self.scale

    def stage(self, key: str) -> tuple[float, float] | None:
        value = self.raw.get("stages", {}).get(key)
        return None if value is None else (float(value[0]), float(value[1]))

    @property
    def span(self) -> tuple[float, float]:
        if "span" in self.raw:
            a, b = self.raw["span"]
            return float(a), float(b)
        if self.model == "ryd4":
            return self.stage("dipole")
        if self.model == "full16":
            return self.stage("stirap_up")[0], self.stage("stirap_down")[1]
        raise KeyError("span")

    def envelope(self, channel: str) -> Envelope:
        if channel not in self._cache:
            self._cache[channel] = self._build_envelope(channel)
        return self._cache[channel]

    def _build_envelope(self, channel: str) -> Envelope:
        envs = self.raw["envelopes"]
        if channel == "microwave" and self.analysis.get("tie_rabi_to_detuning", False):
            chirp = _find_kind(envs["detuning_rr"], "ChirpedDetuning")
            omega = cpr_rabi_for_detuning(chirp["offset"] * self.scale)
            a, b = self.stage("dipole")
            return ttl_truncate(constant(omega), a, b)
        if channel not in envs:
            return zero()
        return from_dict(envs[channel], self.scale)

    # -- models --------------------------------------------------------------

    def dressing_stage(self, V0: float | None = None) -> DressingStage:
        V0 = self.parameter("V0") if V0 is None else V0
        return DressingStage(self.envelope("microwave"), self.envelope("detuning_rr"), V0, self.stage("dipole")[0])

    def gate_schedule(self) -> GateSchedule:
        pump, stokes = self.envelope("pump"), self.envelope("stokes")
        return GateSchedule(
            stirap_up=self.stage("stirap_up"),
            dipole=self.stage("dipole"),
            stirap_down=self.stage("stirap_down"),
            pump=(pump, pump),
            stokes=(stokes, stokes),
            microwave=self.envelope("microwave"),
            detuning_rr=self.envelope("detuning_rr"),
            delta=self.parameter("Delta"),
            V0=self.parameter("V0"),
        )

    def hamiltonian(self):
        m = self.model
        if m == "h3":
            return build_h3(self.envelope("pump"), self.envelope("stokes"), self.parameter("Delta"))
        if m == "h4":
            return build_h4(
                self.envelope("pump"),
                self.envelope("stokes"),
                self.envelope("microwave"),
                self.parameter("Delta"),
                self.envelope("detuning_rr"),
            )
        if m == "ryd4":
            return self.dressing_stage().hamiltonian()
        return build_full_two_qubit(self.gate_schedule())

    def run_trajectory(self) -> PropagationResult:
        t0, t1 = self.span
        return propagate(
            self.hamiltonian(),
            self.space.basis(self.initial_state),
            t0,
            t1,
            tol=self.tolerance,
            sample_dt=self.sample_dt,
        )

    # -- derived configs -----------------------------------------------------

    def with_values(self, updates: Mapping[str, float]) -> "ExperimentConfig":
        """Copy with dotted-path entries replaced (values in config units)."""
        raw = copy.deepcopy(dict(self.raw))
        for path, value in updates.items():
            set_path(raw, path, value)
        raw.pop("sweep", None)
        return ExperimentConfig.from_dict(raw, self.source)

    def resolved(self) -> dict:
        """Config echo with every frequency converted to rad/ns."""
        return to_rad_per_ns(self.raw)


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _path_parts(path: str):
    return [int(p) if p.isdigit() else p for p in path.split(".")]


def get_path(raw, path: str):
    node = raw
    for part in _path_parts(path):
        node = node[part]
    return node


def set_path(raw, path: str, value) -> None:
    parts = _path_parts(path)
    node = raw
    try:
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]]
    except (KeyError, IndexError, TypeError):
        raise ConfigError(f"sweep path {path!r} does not name an existing config entry") from None
    node[parts[-1]] = value


def is_frequency_path(raw, path: str) -> bool:
    parts = _path_parts(path)
    if parts[0] == "parameters":
        return True
    if parts[0] != "envelopes":
        return False
    parent = get_path(raw, ".".join(map(str, parts[:-1])))
    return isinstance(parent, Mapping) and parts[-1] in FREQUENCY_PARAMS.get(parent.get("kind"), ())


def to_rad_per_ns(raw: Mapping[str, Any]) -> dict:
    out = copy.deepcopy(dict(raw))
    scale = UNITS[out["units"]]
    if scale == 1.0:
        return out
    for key, value in out.get("parameters", {}).items():
        out["parameters"][key] = value * scale
    for spec in out["envelopes"].values():
        for env in _walk_envelopes(spec):
            for k in FREQUENCY_PARAMS.get(env.get("kind"), ()):
                if k in env:
                    env[k] = env[k] * scale
    sweep_axes = out.get("sweep", {}).get("axes", {})
    for path, grid in sweep_axes.items():
        if is_frequency_path(raw, path):
            sweep_axes[path] = [g * scale for g in grid]
    out["units"] = "rad-per-ns"
    return out


def check(raw: Mapping[str, Any]) -> tuple[list[str], list[str]]:
    """Schema and physics validation.

    Returns
    -------
    (errors, warnings)
    """
    errors: list[str] = []
    warnings: list[str] = []
    if not isinstance(raw, Mapping):
        return ["config must be a JSON object"], warnings
    unknown = set(raw) - set(TOP_KEYS)
    if unknown:
        errors.append(f"unknown top-level keys: {sorted(unknown)}")
    missing = [k for k, req in TOP_KEYS.items() if req and k not in raw]
    if missing:
        errors.append(f"missing required keys: {missing}")
        return errors, warnings
    if not isinstance(raw["name"], str):
        errors.append("name must be a string")
    if "description" in raw and not isinstance(raw["description"], str):
        errors.append("description must be a string")
    model = raw["model"]
    if model not in MODEL_NAMES:
        errors.append(f"unknown model {model!r}; expected one of {list(MODEL_NAMES)}")
        return errors, warnings
    if raw["units"] not in UNITS:
        errors.append(f"units must be one of {list(UNITS)}, got {raw['units']!r}")
        return errors, warnings
    scale = UNITS[raw["units"]]
    tol = raw.get("tolerance", 1e-10)
    if not _is_number(tol) or not 1e-14 <= tol <= 1e-6:
        errors.append(f"tolerance must be a number in [1e-14, 1e-6], got {tol!r}")
    dt = raw.get("sample_dt", 0.1)
    if not _is_number(dt) or dt <= 0:
        errors.append(f"sample_dt must be a positive number, got {dt!r}")

    params = raw.get("parameters", {})
    if not isinstance(params, Mapping):
        errors.append("parameters must be an object")
        params = {}
    for k, v in params.items():
        if k not in PARAMETER_KEYS:
            errors.append(f"unknown parameter {k!r}; expected one of {list(PARAMETER_KEYS)}")
        elif not _is_number(v):
            errors.append(f"parameter {k} must be a number, got {v!r}")

    stages = raw.get("stages", {})
    parsed_stages = {}
    if not isinstance(stages, Mapping):
        errors.append("stages must be an object")
        stages = {}
    for k, v in stages.items():
        if k not in STAGE_KEYS:
            errors.append(f"unknown stage {k!r}; expected one of {list(STAGE_KEYS)}")
            continue
        iv = _interval(v, f"stage {k}", errors)
        if iv is not None:
            if iv[1] < iv[0]:
                errors.append(f"stage {k} ends before it starts: {list(iv)}")
            parsed_stages[k] = iv
    if model == "full16":
        for k in STAGE_KEYS:
            if k not in stages:
                errors.append(f"model full16 needs stage {k!r}")
    if model == "ryd4" and "dipole" not in stages:
        errors.append("model ryd4 needs stage 'dipole'")
    if {"stirap_up", "dipole"} <= set(parsed_stages) and parsed_stages["stirap_up"][1] > parsed_stages["dipole"][0]:
        errors.append("stages overlap: stirap_up ends after dipole starts")
    if {"dipole", "stirap_down"} <= set(parsed_stages) and parsed_stages["dipole"][1] > parsed_stages["stirap_down"][0]:
        errors.append("stages overlap: dipole ends after stirap_down starts")

    if "span" in raw:
        span = _interval(raw["span"], "span", errors)
        if span is not None and not span[1] > span[0]:
            errors.append(f"span must have end > start, got {raw['span']!r}")
    elif model in ("h3", "h4"):
        errors.append(f"model {model} needs a span")

    space = SPACES[model]
    for key in ("initial_state", "track"):
        if key in raw and raw[key] not in space.labels:
            errors.append(f"{key} {raw[key]!r} is not a basis label of {model}; expected one of {list(space.labels)}")

    analysis = raw.get("analysis", {})
    if not isinstance(analysis, Mapping):
        errors.append("analysis must be an object")
        analysis = {}
    unknown = set(analysis) - ANALYSIS_KEYS
    if unknown:
        errors.append(f"unknown analysis keys: {sorted(unknown)}")
    evaluator = analysis.get("evaluator", "propagate")
    _check_evaluator(evaluator, model, "analysis", errors)
    if "window" in analysis:
        win = _interval(analysis["window"], "analysis.window", errors)
        if win is not None and not (0 <= win[0] < win[1]):
            errors.append(f"analysis.window must satisfy 0 <= start < end, got {analysis['window']!r}")
    for k in ("threshold", "phase_threshold"):
        if k in analysis and (not _is_number(analysis[k]) or not 0 < analysis[k] <= 1):
            errors.append(f"analysis.{k} must be a number in (0, 1], got {analysis[k]!r}")
    if "gate_time" in analysis and (not _is_number(analysis["gate_time"]) or analysis["gate_time"] <= 0):
        errors.append(f"analysis.gate_time must be a positive number, got {analysis['gate_time']!r}")
    for k in ("tie_rabi_to_detuning", "drift_reference"):
        if k in analysis and not isinstance(analysis[k], bool):
            errors.append(f"analysis.{k} must be a boolean")

    envs = raw["envelopes"]
    if not isinstance(envs, Mapping):
        errors.append("envelopes must be an object")
        return errors, warnings
    channels = ENVELOPE_CHANNELS[model]
    tied = bool(analysis.get("tie_rabi_to_detuning", False))
    unknown = set(envs) - set(channels)
    if unknown:
        errors.append(f"unknown envelope channels for {model}: {sorted(unknown)}; expected {sorted(channels)}")
    for ch, req in channels.items():
        if ch == "microwave" and tied:
            if ch in envs:
                errors.append("microwave must be omitted when analysis.tie_rabi_to_detuning is set")
            continue
        if req and ch not in envs:
            errors.append(f"missing envelope channel {ch!r}")
    built = {}
    for ch, spec in envs.items():
        if ch not in channels:
            continue
        try:
            built[ch] = from_dict(spec, scale)
        except ValueError as exc:
            errors.append(f"envelope {ch}: {exc}")
    if tied:
        chirp = _find_kind(envs.get("detuning_rr"), "ChirpedDetuning")
        if chirp is None:
            errors.append("tie_rabi_to_detuning needs a ChirpedDetuning in detuning_rr")
        elif not chirp.get("offset", 0) > 0:
            errors.append("tie_rabi_to_detuning needs a positive chirp offset")
        if "dipole" not in parsed_stages:
            errors.append("tie_rabi_to_detuning needs a dipole stage")

    sweep_cfg = raw.get("sweep")
    if sweep_cfg is not None:
        _check_sweep(raw, sweep_cfg, model, errors)

    output = raw.get("output", {})
    if not isinstance(output, Mapping) or set(output) - OUTPUT_KEYS:
        errors.append(f"output must be an object with keys from {sorted(OUTPUT_KEYS)}")
    elif any(not isinstance(v, str) for v in output.values()):
        errors.append("output entries must be strings")

    if errors:
        return errors, warnings

    # physics: schedule invariants and the CPR Rabi relation
    if model == "full16":
        try:
            cfg = ExperimentConfig(copy.deepcopy(dict(raw)))
            errors.extend(cfg.gate_schedule().validation_errors())
        except (ValueError, KeyError) as exc:
            errors.append(f"gate schedule: {exc}")
    if model in ("ryd4", "full16") and not tied:
        chirp = _find_kind(envs.get("detuning_rr"), "ChirpedDetuning")
        mw = _find_kind(envs.get("microwave"), "Constant")
        if chirp is not None and mw is not None and chirp["offset"] > 0:
            expected = np.sqrt(15.0) / 2 * chirp["offset"]
            rel = abs(mw["value"] - expected) / chirp["offset"]
            if rel > 0.01:
                warnings.append(
                    f"microwave Rabi {mw['value']:g} differs from sqrt(15)/2 * detuning offset = "
                    f"{expected:.6g} by {100 * rel:.1f}% of the offset; CPR is not expected"
                )
    return errors, warnings


def _check_evaluator(name, model, where, errors):
    if name not in MODEL_EVALUATORS:
        errors.append(f"{where}: unknown evaluator {name!r}; expected one of {sorted(MODEL_EVALUATORS)}")
    elif model not in MODEL_EVALUATORS[name]:
        errors.append(f"{where}: evaluator {name!r} does not apply to model {model!r}")


def _check_sweep(raw, sweep_cfg, model, errors):
    if not isinstance(sweep_cfg, Mapping):
        errors.append("sweep must be an object")
        return
    unknown = set(sweep_cfg) - SWEEP_KEYS
    if unknown:
        errors.append(f"unknown sweep keys: {sorted(unknown)}")
    axes = sweep_cfg.get("axes")
    if not isinstance(axes, Mapping) or not axes:
        errors.append("sweep.axes must be a non-empty object of path -> grid")
        return
    for path, grid in axes.items():
        if not isinstance(grid, list) or not grid or not all(_is_number(g) for g in grid):
            errors.append(f"sweep axis {path!r} needs a non-empty list of numbers")
        try:
            target = get_path(raw, path)
        except (KeyError, IndexError, TypeError):
            errors.append(f"sweep axis {path!r} does not name an existing config entry")
            continue
        if not _is_number(target):
            errors.append(f"sweep axis {path!r} must point at a number")
    if "evaluator" not in sweep_cfg:
        errors.append("sweep needs an evaluator")
    else:
        _check_evaluator(sweep_cfg["evaluator"], model, "sweep", errors)
    workers = sweep_cfg.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        errors.append("sweep.workers must be a positive integer")


def validate_file(path) -> dict:
    """Diagnostics for a config file without running it."""
    try:
        raw = load_json(path)
    except ConfigError as exc:
        return {"errors": exc.errors, "warnings": []}
    errors, warnings = check(raw)
    return {"errors": errors, "warnings": warnings}


# ---------------------------------------------------------------------------
# evaluators: config -> scalar outputs (plus optional extra trajectories)


def _window(cfg: ExperimentConfig):
    if "window" in cfg.analysis:
        a, b = cfg.analysis["window"]
        return float(a), float(b)
    a, b = cfg.stage("dipole")
    return 0.0, b - a


def _chirp_period(cfg: ExperimentConfig):
    chirp = _find_kind(cfg.raw["envelopes"].get("detuning_rr"), "ChirpedDetuning")
    return None if chirp is None else float(chirp["period"])


def _chirp_offset(cfg: ExperimentConfig):
    chirp = _find_kind(cfg.raw["envelopes"].get("detuning_rr"), "ChirpedDetuning")
    return None if chirp is None else float(chirp["offset"]) * cfg.scale


def evaluate(cfg: ExperimentConfig, trajectory: PropagationResult | None = None):
    """Run the config's analysis.

    Returns
    -------
    (dict, dict)
        Scalar outputs and extra trajectories keyed by file suffix.
    """
    name = cfg.evaluator
    tol = cfg.tolerance
    if name == "propagate":
        traj = trajectory if trajectory is not None else cfg.run_trajectory()
        final = traj.final
        out = {f"final_P_{k}": v for k, v in final.populations().items()}
        out[f"final_phase_{cfg.track}"] = wrap_phase(np.angle(final.amplitude(cfg.track)))
        out["max_norm_drift"] = float(np.max(np.abs(traj.norms() - 1)))
        return out, {}
    if name == "stirap-infidelity":
        traj = trajectory if trajectory is not None else cfg.run_trajectory()
        out = {
            "infidelity": float(1.0 - traj.population("rS")[-1]),
            "max_P_e": float(traj.population("e").max()),
        }
        return out, {}
    if name == "microwave-distortion":
        traj = trajectory if trajectory is not None else cfg.run_trajectory()
        raw = copy.deepcopy(dict(cfg.raw))
        raw["envelopes"]["microwave"] = {"kind": "Zero"}
        ref = ExperimentConfig.from_dict(raw).run_trajectory()
        with_mw = float(traj.population("e").max())
        without = float(ref.population("e").max())
        out = {
            "max_P_e": with_mw,
            "max_P_e_no_microwave": without,
            "ratio": with_mw / without if without > 0 else float("inf"),
            "final_P_rS": float(traj.population("rS")[-1]),
            "final_P_rS_no_microwave": float(ref.population("rS")[-1]),
        }
        return out, {"no-microwave": ref}
    if name == "cpr-time":
        threshold = float(cfg.analysis.get("threshold", DEFAULT_CPR_THRESHOLD))
        res = find_cpr_time(cfg.dressing_stage(), _window(cfg), threshold, tol)
        out = {"tau_g": res.tau_g, "P_return": res.P_return, "no_cpr": float(res.flagged)}
        period = _chirp_period(cfg)
        if period is not None:
            out["tau_g_over_T"] = res.tau_g / period
        if cfg.analysis.get("drift_reference", False):
            ref = find_cpr_time(cfg.dressing_stage(V0=0.0), _window(cfg), threshold, tol)
            out["tau_g0"] = ref.tau_g
            out["tau_drift_law"] = drift_compensated_gate_time(ref.tau_g, cfg.parameter("V0"), _chirp_offset(cfg))
            out["drift_law_rel_error"] = abs(res.tau_g - out["tau_drift_law"]) / out["tau_drift_law"]
        return out, {}
    if name == "ent-phase":
        threshold = float(cfg.analysis.get("threshold", DEFAULT_CPR_THRESHOLD))
        stage = cfg.dressing_stage()
        if "gate_time" in cfg.analysis:
            tau = float(cfg.analysis["gate_time"])
            out = {"tau_g": tau}
        else:
            res = find_cpr_time(stage, _window(cfg), threshold, tol)
            tau = res.tau_g
            out = {"tau_g": tau, "P_return": res.P_return, "no_cpr": float(res.flagged)}
        out["phi_ent"] = entangling_phase(
            stage, tau, float(cfg.analysis.get("phase_threshold", DEFAULT_PHASE_THRESHOLD)), tol
        )
        return out, {}
    if name == "full-gate":
        report = full_gate_report(cfg.gate_schedule(), tol, cfg.sample_dt, result=trajectory)
        return report.to_dict(), {}
    raise KeyError(f"unknown evaluator {name!r}")


def _make_point_evaluator(name):
    def point_evaluator(point: Mapping[str, Any]) -> dict:
        """``point`` holds ``config`` (a raw dict) plus dotted-path overrides."""
        raw = copy.deepcopy(dict(point["config"]))
        raw.pop("sweep", None)
        raw.setdefault("analysis", {})
        raw["analysis"] = dict(raw["analysis"], evaluator=name)
        for path, value in point.items():
            if path != "config":
                set_path(raw, path, value)
        cfg = ExperimentConfig.from_dict(raw)
        return evaluate(cfg)[0]

    point_evaluator.__name__ = f"evaluate_{name.replace('-', '_')}"
    return point_evaluator


for _name in MODEL_EVALUATORS:
    register_evaluator(_name)(_make_point_evaluator(_name))


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    from .analysis import sweep

    sw = cfg.raw["sweep"]
    axes = [(path, grid) for path, grid in sw["axes"].items()]
    return sweep(axes, sw["evaluator"], base={"config": cfg.raw}, workers=int(sw.get("workers", 1)))


# ---------------------------------------------------------------------------
# output


def trajectory_columns(result: PropagationResult, track: str) -> list[str]:
    return ["t_ns", *(f"P_{lab}" for lab in result.space.labels), f"re_{track}", f"im_{track}"]


def write_trajectory_csv(path, result: PropagationResult, track: str) -> None:
    """Samples as ``t_ns, P_<label>..., re_<track>, im_<track>`` with 17
    significant digits."""
    pops = result.populations()
    amp = result.amplitude(track)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_columns(result, track))
        for k, t in enumerate(result.times):
            row = [t, *pops[k], amp[k].real, amp[k].imag]
            w.writerow([f"{float(v):.17g}" for v in row])


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_sweep_csv(path, result: SweepResult) -> None:
    names = [n for n, _ in result.axes]
    keys = list(result.outputs)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, *keys, "error"])
        for ix in itertools.product(*(range(n) for n in result.shape)):
            axis_vals = [f"{float(g[i]):.17g}" for (_, g), i in zip(result.axes, ix)]
            outs = [f"{float(result.outputs[k][ix]):.17g}" for k in keys]
            w.writerow([*axis_vals, *outs, result.errors.get(ix, "")])


def output_dir(cfg: ExperimentConfig, override=None) -> Path:
    if override is not None:
        return Path(override)
    env = os.environ.get("RYDGATE_OUTPUT_DIR")
    if env:
        return Path(env)
    return Path(cfg.raw.get("output", {}).get("dir", "rydgate-output"))


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def run_config(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run a config and write its CSV and summary JSON.

    Returns the summary. A sweep config writes one row per grid point; any
    other config writes the sampled trajectory of its model.
    """
    start = time.perf_counter()
    out = output_dir(cfg, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.raw.get("output", {}).get("stem", cfg.name)
    files = []
    summary: dict[str, Any] = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "artifact_version": __version__,
        "name": cfg.name,
        "description": cfg.raw.get("description", ""),
        "config": cfg.resolved(),
        "warnings": list(cfg.warnings),
    }
    if "sweep" in cfg.raw:
        result = run_sweep(cfg)
        path = out / f"{stem}.csv"
        write_sweep_csv(path, result)
        files.append(path.name)
        summary["sweep"] = result.to_dict()
    else:
        traj = cfg.run_trajectory()
        path = out / f"{stem}.csv"
        write_trajectory_csv(path, traj, cfg.track)
        files.append(path.name)
        outputs, extra = evaluate(cfg, traj)
        for suffix, res in extra.items():
            p = out / f"{stem}-{suffix}.csv"
            write_trajectory_csv(p, res, cfg.track)
            files.append(p.name)
        key = "report" if cfg.evaluator == "full-gate" else "results"
        summary[key] = outputs
        summary["max_norm_drift"] = float(np.max(np.abs(traj.norms() - 1)))
    summary["csv_schema_version"] = CSV_SCHEMA_VERSION
    summary["files"] = files
    summary["wall_clock_s"] = time.perf_counter() - start
    summary_path = out / f"{stem}.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
    summary["files"].append(summary_path.name)
    return summary
