"""Resonant microwave dressing of two Rydberg ions.

With constant drive and no detuning the |rSrS> amplitude has a closed form.
Propagation follows exp(-iHt), which is the complex conjugate of the
printed expression. Complete return needs V0 t = 2k pi together with a
matching Rabi frequency, and even then the returning amplitude is +1 or 0,
never -1: resonant dressing alone cannot make a pi phase.
"""

import numpy as np

from rydgate.dynamics import propagate
from rydgate.models import RYDBERG_MANIFOLD, build_h2q_ryd, resonant_u11
from rydgate.pulses import constant, zero

V0 = 0.37  # rad/ns

# %% closed form against the integrator
omega = 0.21
grid = np.linspace(0.0, 10 / V0, 101)
res = propagate(build_h2q_ryd(constant(omega), zero(), constant(V0)), RYDBERG_MANIFOLD.basis("rSrS"), 0.0, grid[-1],
                tol=1e-12, times=grid)
dev = np.max(np.abs(res.amplitude("rSrS") - np.conj(resonant_u11(omega, V0, grid))))
print(f"max |numeric - closed form| = {dev:.1e}")

# %% return amplitude at V0 t = 2k pi for Omega = V0 sqrt(c0^2 - 1) / 2
print("\n k  c0   U11")
for k in (1, 2, 3):
    for c0 in (2, 3, 4):
        u = resonant_u11(0.5 * V0 * np.sqrt(c0**2 - 1), V0, 2 * k * np.pi / V0)
        print(f"{k:2d} {c0:3d}   {u.real:+.3f}{u.imag:+.3f}i")

# %% the closest any point gets to -1
t = np.linspace(0, 40 / V0, 801)[:, None]
w = np.linspace(0, 3 * V0, 301)[None, :]
print(f"\nmin |U11 + 1| over the scan: {np.min(np.abs(resonant_u11(w, V0, t) + 1)):.3f}")
