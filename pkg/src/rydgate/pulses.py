"""Pulse and detuning waveforms.

Every waveform is an :class:`Envelope`: a kind name plus named real
parameters, evaluated as a pure function of time (ns) returning rad/ns.
Envelopes serialize to and from plain dictionaries so experiment files can
describe them directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.special import expit

KINDS = (
    "Zero",
    "Constant",
    "Gaussian",
    "DdpPump",
    "DdpStokes",
    "TtlWindowed",
    "ChirpedDetuning",
    "Sum",
)

# Parameters carrying a frequency (converted when a config is given in MHz).
FREQUENCY_PARAMS = {
    "Zero": (),
    "Constant": ("value",),
    "Gaussian": ("peak",),
    "DdpPump": ("peak",),
    "DdpStokes": ("peak",),
    "TtlWindowed": (),
    "ChirpedDetuning": ("offset",),
    "Sum": (),
}

REQUIRED_PARAMS = {
    "Zero": (),
    "Constant": ("value",),
    "Gaussian": ("peak", "center", "width"),
    "DdpPump": ("peak", "T", "steepness", "T0", "n", "center"),
    "DdpStokes": ("peak", "T", "steepness", "T0", "n", "center"),
    "TtlWindowed": ("t_on", "t_off"),
    "ChirpedDetuning": ("offset", "period", "phase"),
    "Sum": (),
}

OPTIONAL_PARAMS = {"DdpPump": ("reverse",), "DdpStokes": ("reverse",)}


@dataclass(frozen=True, eq=False)
class Envelope:
    """Named real waveform ``t -> value`` in rad/ns.

    Build envelopes with the factory functions of this module rather than
    directly. ``parts`` holds the wrapped envelope for ``TtlWindowed`` and
    the summands for ``Sum``.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    parts: tuple["Envelope", ...] = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = _EVALUATORS[self.kind](self, t)
        return float(value) if value.ndim == 0 else value

    @property
    def breakpoints(self) -> tuple[float, ...]:
        points = set()
        if self.kind == "TtlWindowed":
            points.update((self.params["t_on"], self.params["t_off"]))
        for part in self.parts:
            points.update(part.breakpoints)
        return tuple(sorted(float(p) for p in points))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, **{k: _plain(v) for k, v in self.params.items()}}
        if self.kind == "TtlWindowed":
            out["inner"] = self.parts[0].to_dict()
        elif self.kind == "Sum":
            out["terms"] = [p.to_dict() for p in self.parts]
        return out

    def __repr__(self):
        return f"Envelope({self.to_dict()})"


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _zero(env, t):
    return np.zeros_like(t)


def _constant(env, t):
    return np.full_like(t, env.params["value"])


def _gaussian(env, t):
    p = env.params
    return p["peak"] * np.exp(-((t - p["center"]) ** 2) / p["width"] ** 2)


def _ddp_mixing(env, t):
    p = env.params
    s = t - p["center"]
    if p.get("reverse", False):
        s = -s
    mask = np.exp(-((s / p["T0"]) ** (2 * p["n"])))
    mixing = expit(p["steepness"] * s / p["T"])
    return p["peak"] * mask, 0.5 * np.pi * mixing


def _ddp_pump(env, t):
    amp, angle = _ddp_mixing(env, t)
    return amp * np.sin(angle)


def _ddp_stokes(env, t):
    amp, angle = _ddp_mixing(env, t)
    return amp * np.cos(angle)


def _ttl(env, t):
    p = env.params
    inside = (t >= p["t_on"]) & (t <= p["t_off"])
    return np.where(inside, env.parts[0](t), 0.0)


def _chirp(env, t):
    p = env.params
    return p["offset"] * (1.0 + np.sin(np.pi * t / p["period"] + p["phase"]) ** 4)


def _sum(env, t):
    total = np.zeros_like(t)
    for part in env.parts:
        total = total + part(t)
    return total


_EVALUATORS = {
    "Zero": _zero,
    "Constant": _constant,
    "Gaussian": _gaussian,
    "DdpPump": _ddp_pump,
    "DdpStokes": _ddp_stokes,
    "TtlWindowed": _ttl,
    "ChirpedDetuning": _chirp,
    "Sum": _sum,
}


def zero() -> Envelope:
    return Envelope("Zero")


def constant(value: float) -> Envelope:
    return Envelope("Constant", {"value": float(value)})


def gaussian(peak: float, center: float, width: float) -> Envelope:
    """``peak * exp(-(t - center)^2 / width^2)``."""
    if width <= 0:
        raise ValueError(f"Gaussian width must be positive, got {width!r}")
    if peak < 0:
        raise ValueError(f"Gaussian peak must be non-negative, got {peak!r}")
    return Envelope("Gaussian", {"peak": float(peak), "center": float(center), "width": float(width)})


def ddp_pair(
    peak: float,
    T: float,
    steepness: float,
    T0: float | None = None,
    n: int = 1,
    center: float = 0.0,
    reverse: bool = False,
) -> tuple[Envelope, Envelope]:
    """Pump and Stokes pulses with constant rms amplitude under a mask.

    With ``s = t - center``::

        pump(t)   = peak * F(s) * sin(pi f(s) / 2)
        stokes(t) = peak * F(s) * cos(pi f(s) / 2)
        f(s) = 1 / (1 + exp(-steepness * s / T))
        F(s) = exp(-(s / T0)^(2 n))

    so ``sqrt(pump^2 + stokes^2) = peak * F(s)``. The Stokes pulse leads.
    ``reverse=True`` mirrors both pulses in time about ``center`` (pump
    leads), which is the return path from the Rydberg state.

    ``T0`` defaults to ``T``.
    """
    T0 = T if T0 is None else T0
    if peak < 0:
        raise ValueError(f"peak must be non-negative, got {peak!r}")
    if T <= 0 or T0 <= 0:
        raise ValueError(f"timescales must be positive, got T={T!r}, T0={T0!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"hypergaussian order n must be a positive integer, got {n!r}")
    params = {
        "peak": float(peak),
        "T": float(T),
        "steepness": float(steepness),
        "T0": float(T0),
        "n": int(n),
        "center": float(center),
        "reverse": bool(reverse),
    }
    return Envelope("DdpPump", params), Envelope("DdpStokes", dict(params))


def ttl_truncate(inner: Envelope, t_on: float, t_off: float) -> Envelope:
    """``inner`` on the closed window ``[t_on, t_off]`` and exactly zero
    outside. The edges are hard steps."""
    if not t_on < t_off:
        raise ValueError(f"need t_on < t_off, got [{t_on!r}, {t_off!r}]")
    return Envelope("TtlWindowed", {"t_on": float(t_on), "t_off": float(t_off)}, (inner,))


def chirped_detuning(offset: float, period: float, phase: float) -> Envelope:
    """``offset * (1 + sin(pi t / period + phase)^4)``.

    Ranges over ``[offset, 2 offset]``; ``t`` is the absolute clock.
    """
    if period <= 0:
        raise ValueError(f"period must be positive, got {period!r}")
    return Envelope(
        "ChirpedDetuning",
        {"offset": float(offset), "period": float(period), "phase": float(phase)},
    )


def envelope_sum(*terms: Envelope) -> Envelope:
    """Pointwise sum; used to place several pulses on one channel."""
    if not terms:
        return zero()
    if len(terms) == 1:
        return terms[0]
    return Envelope("Sum", {}, tuple(terms))


def from_dict(spec: Mapping[str, Any] | list, scale: float = 1.0) -> Envelope:
    """Build an envelope from its dictionary form.

    A list is read as a sum of envelopes. Frequency-valued parameters are
    multiplied by ``scale`` (use :data:`rydgate.units.MHZ` for values quoted
    in MHz). Unknown or missing keys raise ``ValueError``.
    """
    if isinstance(spec, list):
        return envelope_sum(*(from_dict(s, scale) for s in spec))
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ValueError(f"envelope definition needs a 'kind': {spec!r}")
    kind = spec["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown envelope kind {kind!r}; expected one of {KINDS}")
    nested = {"TtlWindowed": ("inner",), "Sum": ("terms",)}.get(kind, ())
    allowed = set(REQUIRED_PARAMS[kind]) | set(OPTIONAL_PARAMS.get(kind, ())) | set(nested) | {"kind"}
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown keys for {kind} envelope: {sorted(unknown)}")
    missing = [k for k in REQUIRED_PARAMS[kind] + nested if k not in spec]
    if missing:
        raise ValueError(f"missing keys for {kind} envelope: {missing}")
    p = {k: spec[k] for k in REQUIRED_PARAMS[kind] + OPTIONAL_PARAMS.get(kind, ()) if k in spec}
    for k, v in p.items():
        if k == "reverse":
            if not isinstance(v, bool):
                raise ValueError(f"{kind}.reverse must be a boolean, got {v!r}")
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"{kind}.{k} must be a number, got {v!r}")
    for k in FREQUENCY_PARAMS[kind]:
        p[k] = p[k] * scale
    if kind == "Zero":
        return zero()
    if kind == "Constant":
        return constant(p["value"])
    if kind == "Gaussian":
        return gaussian(p["peak"], p["center"], p["width"])
    if kind in ("DdpPump", "DdpStokes"):
        pump, stokes = ddp_pair(p["peak"], p["T"], p["steepness"], p["T0"], p["n"], p["center"], p.get("reverse", False))
        return pump if kind == "DdpPump" else stokes
    if kind == "TtlWindowed":
        return ttl_truncate(from_dict(spec["inner"], scale), p["t_on"], p["t_off"])
    if kind == "ChirpedDetuning":
        return chirped_detuning(p["offset"], p["period"], p["phase"])
    return envelope_sum(*(from_dict(s, scale) for s in spec["terms"]))
