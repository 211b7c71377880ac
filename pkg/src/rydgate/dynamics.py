"""States, time-dependent Hamiltonians and Schrödinger propagation.

Everything here works in units with hbar = 1, times in ns and energies in
rad/ns. The production integrator is an adaptive 8(5,3) Dormand-Prince pair
(``scipy.integrate.solve_ivp`` with ``method="DOP853"``) run segment by
segment between the declared discontinuities of the Hamiltonian.
:func:`propagate_expmid` is an independent piecewise-exponential stepper kept
for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-9


class NonHermitianError(ValueError):
    """Raised when a Hamiltonian evaluator returns a non-Hermitian matrix."""


class NonFiniteHamiltonianError(ValueError, ArithmeticError):
    """Raised when a Hamiltonian evaluator returns NaN or infinite entries."""


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator cannot continue."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time!r} ns)")
        self.time = time


@dataclass(frozen=True)
class StateSpace:
    """Ordered, labelled orthonormal basis."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if len(labels) < 2:
            raise ValueError("a state space needs at least two basis states")
        if len(set(labels)) != len(labels):
            raise ValueError(f"basis labels must be unique, got {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown basis label {label!r}; known: {self.labels}") from None

    def basis(self, label: str) -> "QuantumState":
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index(label)] = 1.0
        return QuantumState(self, vec)

    def projector(self, label: str) -> np.ndarray:
        k = self.index(label)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[k, k] = 1.0
        return out


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Complex amplitude vector over a :class:`StateSpace`."""

    space: StateSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.space.dim,):
            raise ValueError(
                f"expected {self.space.dim} amplitudes, got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState(self.space, self.amplitudes / n)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.space.index(label)])

    def populations(self) -> dict[str, float]:
        return dict(zip(self.space.labels, np.abs(self.amplitudes) ** 2))

    def __repr__(self):
        return f"QuantumState({dict(zip(self.space.labels, self.amplitudes))})"


def superposition(space: StateSpace, weights: dict[str, complex]) -> QuantumState:
    """Normalized superposition ``sum_k w_k |k>``."""
    vec = np.zeros(space.dim, dtype=complex)
    for label, w in weights.items():
        vec[space.index(label)] += w
    return QuantumState(space, vec).normalized()


class TimeDependentHamiltonian:
    """Hermitian matrix-valued function of time over a labelled basis.

    Parameters
    ----------
    space : StateSpace
        Basis the matrix acts in.
    evaluator : callable
        ``t -> (dim, dim)`` complex array in rad/ns.
    breakpoints : iterable of float, optional
        Times at which the Hamiltonian may jump. The integrator never steps
        across them.
    """

    def __init__(
        self,
        space: StateSpace,
        evaluator: Callable[[float], np.ndarray],
        breakpoints: Iterable[float] = (),
    ):
        self.space = space
        self._evaluator = evaluator
        self.breakpoints = tuple(sorted({float(b) for b in breakpoints}))

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self._evaluator(t), dtype=complex)

    def hermiticity_defect(self, t: float) -> float:
        h = self(t)
        return float(np.max(np.abs(h - h.conj().T)))

    def check_hermitian(self, t: float, atol: float = HERMITIAN_ATOL) -> None:
        h = self(t)
        if h.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"evaluator returned shape {h.shape} at t={t}")
        if not np.all(np.isfinite(h)):
            raise NonFiniteHamiltonianError(f"Hamiltonian has non-finite entries at t = {t!r} ns")
        defect = float(np.max(np.abs(h - h.conj().T)))
        if defect > atol:
            raise NonHermitianError(
                f"Hamiltonian is not Hermitian at t = {t!r} ns "
                f"(max |H - H^dagger| = {defect:.3e} rad/ns)"
            )


@dataclass(frozen=True, eq=False)
class PropagationResult:
    """Sampled trajectory of a propagation.

    ``states[k]`` holds the amplitudes at ``times[k]``; the last row is the
    final state.
    """

    space: StateSpace
    times: np.ndarray
    states: np.ndarray = field(repr=False)

    @property
    def final(self) -> QuantumState:
        return QuantumState(self.space, self.states[-1])

    @property
    def trajectory(self) -> list[QuantumState]:
        return [QuantumState(self.space, row) for row in self.states]

    def population(self, label: str) -> np.ndarray:
        return np.abs(self.states[:, self.space.index(label)]) ** 2

    def amplitude(self, label: str) -> np.ndarray:
        return self.states[:, self.space.index(label)]

    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def sample_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    """``t0, t0 + dt, ...`` strictly below ``t1``, then ``t1`` itself."""
    n = int(np.floor((t1 - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(n + 1)
    grid = grid[grid < t1 - 1e-9 * dt]
    return np.append(grid, t1)


def _segments(t0: float, t1: float, breakpoints: Sequence[float]) -> list[tuple[float, float]]:
    cuts = [t0] + [b for b in breakpoints if t0 < b < t1] + [t1]
    return list(zip(cuts[:-1], cuts[1:]))


def _check_start(hamiltonian: TimeDependentHamiltonian, psi0: QuantumState, t0, t1):
    if psi0.space != hamiltonian.space:
        raise ValueError("initial state and Hamiltonian live in different spaces")
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got t0={t0}, t1={t1}")
    if abs(psi0.norm - 1.0) > NORM_ATOL:
        raise ValueError(f"initial state is not normalized (norm={psi0.norm!r})")


def propagate(
    hamiltonian: TimeDependentHamiltonian,
    psi0: QuantumState,
    t0: float,
    t1: float,
    tol: float = 1e-10,
    sample_dt: float = 0.1,
    times: Sequence[float] | None = None,
    max_step: float = 1.0,
) -> PropagationResult:
    """Solve ``i d psi/dt = H(t) psi`` from ``t0`` to ``t1``.

    Parameters
    ----------
    hamiltonian : TimeDependentHamiltonian
    psi0 : QuantumState
        Normalized initial state at ``t0``.
    t0, t1 : float
        Interval in ns, ``t1 > t0``.
    tol : float
        Relative tolerance of the embedded Runge-Kutta pair, in
        ``[1e-14, 1e-6]``. The absolute tolerance is ``tol / 100``.
    sample_dt : float
        Spacing of the stored trajectory. Ignored when ``times`` is given.
    times : sequence of float, optional
        Explicit sample grid; must start at ``t0`` and end at ``t1``.
    max_step : float
        Upper bound on the step, so that pulses switching on from an
        exactly quiet start are never skipped.

    Returns
    -------
    PropagationResult

    Raises
    ------
    NonHermitianError
        If ``H`` fails the Hermiticity check at any sample time.
    IntegrationError
        If the step size underflows.
    """
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-14, 1e-6], got {tol!r}")
    _check_start(hamiltonian, psi0, t0, t1)
    if times is None:
        grid = sample_grid(t0, t1, sample_dt)
    else:
        grid = np.asarray(times, dtype=float)
        if grid[0] != t0 or grid[-1] != t1 or np.any(np.diff(grid) <= 0):
            raise ValueError("sample times must increase strictly from t0 to t1")

    for t in grid:
        hamiltonian.check_hermitian(t)

    reached = [t0]

    def rhs(t, y):
        reached[0] = t
        return -1j * (hamiltonian(t) @ y)

    out = np.empty((len(grid), hamiltonian.space.dim), dtype=complex)
    out[0] = psi0.amplitudes
    y = np.array(psi0.amplitudes)
    filled = 1
    for a, b in _segments(t0, t1, hamiltonian.breakpoints):
        hamiltonian.check_hermitian(a)
        mask = (grid > a) & (grid <= b)
        t_eval = grid[mask]
        sol = solve_ivp(
            rhs,
            (a, b),
            y,
            method="DOP853",
            rtol=tol,
            atol=tol * 1e-2,
            t_eval=np.concatenate([t_eval, [b]]) if not t_eval.size or t_eval[-1] != b else t_eval,
            max_step=max_step,
        )
        if sol.status != 0:
            raise IntegrationError(sol.message, float(reached[0]))
        k = int(mask.sum())
        out[filled:filled + k] = sol.y[:, :k].T
        filled += k
        y = sol.y[:, -1]
    return PropagationResult(hamiltonian.space, grid, out)


def propagate_expmid(
    hamiltonian: TimeDependentHamiltonian,
    psi0: QuantumState,
    t0: float,
    t1: float,
    dt: float = 0.01,
    chunk: int = 4096,
) -> QuantumState:
    """Piecewise-exponential propagation with the Hamiltonian frozen at each
    step midpoint.

    Second order in ``dt``; steps are aligned with the Hamiltonian's
    breakpoints. Used as an independent reference for :func:`propagate`.
    """
    _check_start(hamiltonian, psi0, t0, t1)
    psi = np.array(psi0.amplitudes)
    for a, b in _segments(t0, t1, hamiltonian.breakpoints):
        n = max(1, int(np.ceil((b - a) / dt)))
        h = (b - a) / n
        mids = a + h * (np.arange(n) + 0.5)
        for start in range(0, n, chunk):
            block = np.array([hamiltonian(t) for t in mids[start:start + chunk]])
            w, v = np.linalg.eigh(block)
            phases = np.exp(-1j * h * w)
            for vk, pk in zip(v, phases):
                psi = vk @ (pk * (vk.conj().T @ psi))
    return QuantumState(hamiltonian.space, psi)


def fidelity(psi_a: QuantumState, psi_b: QuantumState) -> float:
    """Overlap fidelity ``|<a|b>|^2``."""
    if psi_a.space.dim != psi_b.space.dim:
        raise ValueError(
            f"dimension mismatch: {psi_a.space.dim} vs {psi_b.space.dim}"
        )
    if psi_a.space != psi_b.space:
        raise ValueError("states live in different state spaces")
    value = abs(np.vdot(psi_a.amplitudes, psi_b.amplitudes)) ** 2
    return float(min(1.0, max(0.0, value)))


def wrap_phase(phase):
    """Map angles onto ``(-pi, pi]``."""
    wrapped = np.angle(np.exp(1j * np.asarray(phase, dtype=float)))
    wrapped = np.where(wrapped <= -np.pi, np.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def observe(psi: QuantumState, label: str) -> tuple[float, float]:
    """Population and phase of one basis amplitude.

    The phase is ``arg(c)`` in ``(-pi, pi]``; global phase is kept.
    """
    c = psi.amplitude(label)
    return abs(c) ** 2, wrap_phase(np.angle(c))
