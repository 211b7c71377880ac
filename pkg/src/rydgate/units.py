"""Unit conventions.

Frequencies are stored as angular frequencies in rad/ns and times in ns.
Published parameters are usually quoted as ``Omega / 2pi`` in MHz; use
:func:`from_mhz` to bring them into the internal convention.
"""

import numpy as np

#: rad/ns per (MHz, quoted as Omega/2pi)
MHZ = 2.0 * np.pi * 1e-3


def from_mhz(value):
    """Convert ``Omega/2pi`` in MHz to an angular frequency in rad/ns."""
    return np.multiply(value, MHZ) if np.ndim(value) else float(value) * MHZ


def to_mhz(value):
    """Convert an angular frequency in rad/ns to ``Omega/2pi`` in MHz."""
    return np.divide(value, MHZ) if np.ndim(value) else float(value) / MHZ
