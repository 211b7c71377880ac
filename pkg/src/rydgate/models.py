"""Hamiltonians of the single ion, the two-ion Rydberg manifold and the full
two-qubit gate, plus their adiabatic and rotated-basis transforms.

Level scheme per ion: ``|0>`` (metastable qubit state) -- pump -- ``|e>``
(intermediate) -- Stokes -- ``|rS>`` -- microwave -- ``|rP>``. The second
qubit state ``|1>`` is dark to every drive and is left out.

All couplings enter as ``+Omega/2`` off-diagonals; energies are in rad/ns.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import QuantumState, StateSpace, TimeDependentHamiltonian
from .pulses import Envelope, zero

SINGLE_ION = StateSpace(("0", "e", "rS", "rP"))
THREE_LEVEL = StateSpace(("0", "e", "rS"))
RYDBERG_MANIFOLD = StateSpace(("rSrS", "rSrP", "rPrS", "rPrP"))
TWO_ION = StateSpace(tuple(a + b for a in SINGLE_ION.labels for b in SINGLE_ION.labels))
ROTATED_MANIFOLD = StateSpace(("SS+PP", "SP+PS", "PS-SP", "PP-SS"))

MODEL_NAMES = ("h3", "h4", "ryd4", "full16")


def _unit(dim, i, j):
    m = np.zeros((dim, dim))
    m[i, j] = 1.0
    return m


def _sym(dim, i, j):
    return _unit(dim, i, j) + _unit(dim, j, i)


# single-ion operator pieces, SINGLE_ION ordering
_PUMP = _sym(4, 0, 1)
_STOKES = _sym(4, 1, 2)
_MW = _sym(4, 2, 3)
_E = _unit(4, 1, 1)
_RP = _unit(4, 3, 3)


def build_h3(pump: Envelope, stokes: Envelope, delta: float) -> TimeDependentHamiltonian:
    """Three-level ladder ``|0> - |e> - |rS>`` with detuning ``delta`` on
    ``|e>``."""
    p3, s3, e3 = _PUMP[:3, :3], _STOKES[:3, :3], _E[:3, :3]

    def h(t):
        return 0.5 * pump(t) * p3 + 0.5 * stokes(t) * s3 + delta * e3

    return TimeDependentHamiltonian(THREE_LEVEL, h, pump.breakpoints + stokes.breakpoints)


def build_h4(
    pump: Envelope,
    stokes: Envelope,
    microwave: Envelope,
    delta: float,
    detuning_rr: Envelope | None = None,
) -> TimeDependentHamiltonian:
    """Single ion with the microwave-dressed ``|rS> - |rP>`` transition."""
    detuning_rr = detuning_rr if detuning_rr is not None else zero()

    def h(t):
        return (
            0.5 * pump(t) * _PUMP
            + 0.5 * stokes(t) * _STOKES
            + 0.5 * microwave(t) * _MW
            + delta * _E
            + detuning_rr(t) * _RP
        )

    bps = pump.breakpoints + stokes.breakpoints + microwave.breakpoints + detuning_rr.breakpoints
    return TimeDependentHamiltonian(SINGLE_ION, h, bps)


@dataclass(frozen=True)
class MixingAngles:
    theta: float
    phi: float
    gamma: float
    rms: float


@dataclass(frozen=True, eq=False)
class AdiabaticDecomposition:
    """Adiabatic basis of the three-level ladder at one instant.

    ``transform`` has the adiabatic states as columns, in the order
    ``(bright1, dark, bright2)``, so that
    ``transform.conj().T @ H3 @ transform == diag(energies)``.
    """

    transform: np.ndarray
    energies: np.ndarray
    bright1: QuantumState
    bright2: QuantumState
    dark: QuantumState


def mixing_angles(omega_p: float, omega_s: float, delta: float) -> MixingAngles:
    rms = float(np.hypot(omega_p, omega_s))
    if rms == 0.0:
        raise ValueError("mixing angle undefined: pump and Stokes both vanish")
    theta = float(np.arctan2(omega_p, omega_s))
    # atan2 keeps 2*phi in (0, pi) for either sign of the detuning
    phi = 0.5 * float(np.arctan2(rms, delta))
    return MixingAngles(theta, phi, phi, rms)


def adiabatic_decompose3(omega_p: float, omega_s: float, delta: float):
    """Bright/dark decomposition of the three-level ladder.

    Returns
    -------
    (MixingAngles, AdiabaticDecomposition)

    Notes
    -----
    The mixing angle is ``theta = atan(omega_p / omega_s)``, so the dark state
    ``cos(theta)|0> - sin(theta)|rS>`` starts in ``|0>`` when the Stokes
    pulse leads.
    """
    ang = mixing_angles(omega_p, omega_s, delta)
    st, ct = np.sin(ang.theta), np.cos(ang.theta)
    sp, cp = np.sin(ang.phi), np.cos(ang.phi)
    rows = np.array(
        [
            [st * sp, cp, ct * sp],
            [ct, 0.0, -st],
            [st * cp, -sp, ct * cp],
        ]
    )
    root = np.sqrt(delta**2 + ang.rms**2)
    lam_plus, lam_minus = 0.5 * (delta + root), 0.5 * (delta - root)
    decomposition = AdiabaticDecomposition(
        transform=rows.T.astype(complex),
        energies=np.array([lam_plus, 0.0, lam_minus]),
        bright1=QuantumState(THREE_LEVEL, rows[0]),
        bright2=QuantumState(THREE_LEVEL, rows[2]),
        dark=QuantumState(THREE_LEVEL, rows[1]),
    )
    return ang, decomposition


def h3_matrix(omega_p: float, omega_s: float, delta: float) -> np.ndarray:
    """Instantaneous three-level matrix for given couplings."""
    return 0.5 * omega_p * _PUMP[:3, :3] + 0.5 * omega_s * _STOKES[:3, :3] + delta * _E[:3, :3]


def h4_matrix(omega_p, omega_s, omega_mw, delta, delta_rr) -> np.ndarray:
    return (
        0.5 * omega_p * _PUMP
        + 0.5 * omega_s * _STOKES
        + 0.5 * omega_mw * _MW
        + delta * _E
        + delta_rr * _RP
    )


def adiabatic_transform4(omega_p, omega_s, omega_mw, delta, delta_rr) -> np.ndarray:
    """Four-level Hamiltonian in the three-level adiabatic basis plus ``|rP>``.

    Closed form; the dark state couples to ``|rP>`` with strength
    ``-omega_mw * omega_p / (2 * rms)``.
    """
    ang = mixing_angles(omega_p, omega_s, delta)
    root = np.sqrt(delta**2 + ang.rms**2)
    lam_plus, lam_minus = 0.5 * (delta + root), 0.5 * (delta - root)
    c1 = omega_mw * omega_s * np.sin(ang.gamma) / (2 * ang.rms)
    c2 = -omega_mw * omega_p / (2 * ang.rms)
    c3 = omega_mw * omega_s * np.cos(ang.gamma) / (2 * ang.rms)
    return np.array(
        [
            [lam_plus, 0.0, 0.0, c1],
            [0.0, 0.0, 0.0, c2],
            [0.0, 0.0, lam_minus, c3],
            [c1, c2, c3, delta_rr],
        ]
    )


def dd_strength(V0, omega_mw, delta_rr):
    """Dressed dipole-dipole exchange ``V0 * W^2 / (W^2 + D^2)``."""
    omega_mw = np.asarray(omega_mw, dtype=float)
    delta_rr = np.asarray(delta_rr, dtype=float)
    scale = np.maximum(np.abs(omega_mw), np.abs(delta_rr))
    if np.any(scale == 0):
        raise ValueError("dipole-dipole strength undefined for omega_mw = delta_rr = 0")
    # scaled so that tiny rates neither underflow nor overshoot V0
    w2 = (omega_mw / scale) ** 2
    value = V0 * w2 / (w2 + (delta_rr / scale) ** 2)
    return float(value) if value.ndim == 0 else value


def dressed_coupling(V0: float, microwave: Envelope, detuning_rr: Envelope) -> Callable[[float], float]:
    """``t -> V(t)`` from the instantaneous microwave and detuning.

    Zero wherever both drives are off, which is the case outside the
    dressing stage.
    """

    def coupling(t):
        w, d = microwave(t), detuning_rr(t)
        if w == 0.0 and d == 0.0:
            return 0.0
        return dd_strength(V0, w, d)

    return coupling


# Rydberg-manifold operator pieces, RYDBERG_MANIFOLD ordering
_RYD_MW = _sym(4, 0, 1) + _sym(4, 0, 2) + _sym(4, 1, 3) + _sym(4, 2, 3)
_RYD_DET = np.diag([0.0, 1.0, 1.0, 2.0])
_RYD_EX = _sym(4, 1, 2)


def ryd_matrix(omega_mw, delta_rr, V) -> np.ndarray:
    return 0.5 * omega_mw * _RYD_MW + delta_rr * _RYD_DET + V * _RYD_EX


def build_h2q_ryd(
    microwave: Envelope,
    detuning_rr: Envelope,
    coupling: Callable[[float], float],
) -> TimeDependentHamiltonian:
    """Two ions inside ``{rSrS, rSrP, rPrS, rPrP}``.

    ``coupling`` is any ``t -> V(t)`` callable: an :class:`Envelope`, or the
    dressed strength from :func:`dressed_coupling`.
    """

    def h(t):
        return ryd_matrix(microwave(t), detuning_rr(t), coupling(t))

    bps = microwave.breakpoints + detuning_rr.breakpoints + tuple(getattr(coupling, "breakpoints", ()))
    return TimeDependentHamiltonian(RYDBERG_MANIFOLD, h, bps)


def manifold_rotation() -> np.ndarray:
    """Columns are the rotated basis states in manifold coordinates:
    ``(SS+PP)/√2, (SP+PS)/√2, (PS-SP)/√2, (PP-SS)/√2``."""
    r = np.sqrt(0.5)
    return np.array(
        [
            [r, 0.0, 0.0, -r],
            [0.0, r, -r, 0.0],
            [0.0, r, r, 0.0],
            [r, 0.0, 0.0, r],
        ]
    )


def rotated_basis_hamiltonian(microwave: Envelope, V0: float) -> TimeDependentHamiltonian:
    """Resonant manifold Hamiltonian in the rotated basis.

    ``[[0, W], [W, V0]] ⊕ (-V0) ⊕ 0``: a driven two-level block and two
    uncoupled states. Valid for zero microwave detuning only.
    """

    def h(t):
        w = microwave(t)
        return np.array(
            [
                [0.0, w, 0.0, 0.0],
                [w, V0, 0.0, 0.0],
                [0.0, 0.0, -V0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
            ]
        )

    return TimeDependentHamiltonian(ROTATED_MANIFOLD, h, microwave.breakpoints)


def resonant_u11(omega_mw, V0, t):
    """Closed-form ``<rSrS|U|rSrS>`` for constant resonant dressing.

    Evaluated in the ``U = exp(+i H t)`` convention::

        (1 + e^{i V0 t/2} (cos(R t/2) - i V0 sin(R t/2) / R)) / 2,
        R = sqrt(4 omega_mw^2 + V0^2)

    The Schrödinger solution ``exp(-i H t)`` gives the complex conjugate.
    """
    omega_mw = np.asarray(omega_mw, dtype=float)
    V0 = np.asarray(V0, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    R = np.sqrt(4 * omega_mw**2 + V0**2)
    half = 0.5 * R * t
    # sin(R t/2)/R -> t/2 when R -> 0
    sinc_term = np.where(R > 0, np.sin(half) / np.where(R > 0, R, 1.0), 0.5 * t)
    value = 0.5 * (1 + np.exp(0.5j * V0 * t) * (np.cos(half) - 1j * V0 * sinc_term))
    return complex(value) if value.ndim == 0 else value


@dataclass(frozen=True, eq=False)
class DressingStage:
    """Microwave-dressing stage acting on the Rydberg manifold only.

    ``detuning_rr`` is evaluated on the absolute clock; ``t_start`` is where
    the stage begins, so gate times are measured from it.
    """

    microwave: Envelope
    detuning_rr: Envelope
    V0: float
    t_start: float = 0.0

    def coupling(self) -> Callable[[float], float]:
        return dressed_coupling(self.V0, self.microwave, self.detuning_rr)

    def hamiltonian(self) -> TimeDependentHamiltonian:
        return build_h2q_ryd(self.microwave, self.detuning_rr, self.coupling())

    def with_V0(self, V0: float) -> "DressingStage":
        return replace(self, V0=float(V0))


@dataclass(frozen=True, eq=False)
class GateSchedule:
    """Timing plan of the full gate.

    Stages are ``(start, end)`` pairs in ns: STIRAP up, dipole-dipole
    dressing, STIRAP down. ``pump`` and ``stokes`` hold one envelope per
    ion.
    """

    stirap_up: tuple[float, float]
    dipole: tuple[float, float]
    stirap_down: tuple[float, float]
    pump: tuple[Envelope, Envelope]
    stokes: tuple[Envelope, Envelope]
    microwave: Envelope
    detuning_rr: Envelope
    delta: float
    V0: float

    @property
    def span(self) -> tuple[float, float]:
        return self.stirap_up[0], self.stirap_down[1]

    def validation_errors(self, dt: float = 0.05) -> list[str]:
        errors = []
        stages = {"stirap_up": self.stirap_up, "dipole": self.dipole, "stirap_down": self.stirap_down}
        for name, (a, b) in stages.items():
            if not b >= a:
                errors.append(f"stage {name} ends before it starts: [{a}, {b}]")
        if self.stirap_up[1] > self.dipole[0] or self.dipole[1] > self.stirap_down[0]:
            errors.append("stages overlap")
        elif self.stirap_up[1] != self.dipole[0] or self.dipole[1] != self.stirap_down[0]:
            errors.append("stages are not contiguous")
        if errors:
            return errors
        t = np.arange(self.span[0], self.span[1] + dt, dt)
        inside = (t > self.dipole[0]) & (t < self.dipole[1])
        outside = (t < self.dipole[0]) | (t > self.dipole[1])
        for label, env in (("microwave", self.microwave), ("detuning_rr", self.detuning_rr)):
            if np.any(env(t[outside]) != 0.0):
                errors.append(f"{label} is nonzero outside the dipole stage")
        for label, envs in (("pump", self.pump), ("stokes", self.stokes)):
            for k, env in enumerate(envs):
                if np.any(env(t[inside]) != 0.0):
                    errors.append(f"{label} of ion {k + 1} is nonzero inside the dipole stage")
        return errors

    def validate(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ValueError("invalid gate schedule: " + "; ".join(errors))

    def dressing_stage(self) -> DressingStage:
        return DressingStage(self.microwave, self.detuning_rr, self.V0, self.dipole[0])

    def with_V0(self, V0: float) -> "GateSchedule":
        return replace(self, V0=float(V0))


_I4 = np.eye(4)
_EXCHANGE16 = np.zeros((16, 16))
_EXCHANGE16[TWO_ION.index("rSrP"), TWO_ION.index("rPrS")] = 1.0
_EXCHANGE16[TWO_ION.index("rPrS"), TWO_ION.index("rSrP")] = 1.0
_TERMS16 = {
    name: (np.kron(op, _I4), np.kron(_I4, op))
    for name, op in (("pump", _PUMP), ("stokes", _STOKES), ("mw", _MW), ("e", _E), ("rp", _RP))
}


def ion_swap16() -> np.ndarray:
    """Permutation exchanging the two ions in the 16-state product basis."""
    perm = np.zeros((16, 16))
    for i in range(4):
        for j in range(4):
            perm[4 * j + i, 4 * i + j] = 1.0
    return perm


def build_full_two_qubit(schedule: GateSchedule) -> TimeDependentHamiltonian:
    """Both ions with all drives plus the dressed exchange ``V(t)``.

    ``H = H_1 ⊗ 1 + 1 ⊗ H_2 + V(t) (|rSrP><rPrS| + h.c.)``, where
    ``V(t)`` follows the microwave and detuning inside the dipole stage and
    vanishes elsewhere.
    """
    s = schedule
    coupling = dressed_coupling(s.V0, s.microwave, s.detuning_rr)
    (p1, p2), (s1, s2) = _TERMS16["pump"], _TERMS16["stokes"]
    mw = sum(_TERMS16["mw"])
    e = sum(_TERMS16["e"])
    rp = sum(_TERMS16["rp"])
    lo, hi = s.dipole

    def h(t):
        out = (
            0.5 * s.pump[0](t) * p1
            + 0.5 * s.pump[1](t) * p2
            + 0.5 * s.stokes[0](t) * s1
            + 0.5 * s.stokes[1](t) * s2
            + s.delta * e
        )
        if lo <= t <= hi:
            out = out + 0.5 * s.microwave(t) * mw + s.detuning_rr(t) * rp + coupling(t) * _EXCHANGE16
        return out

    bps = [lo, hi, *s.stirap_up, *s.stirap_down, *s.microwave.breakpoints, *s.detuning_rr.breakpoints]
    for env in (*s.pump, *s.stokes):
        bps.extend(env.breakpoints)
    return TimeDependentHamiltonian(TWO_ION, h, bps)
