"""Resistively loaded transmission-line coupling network.

Adjacent oscillators couple through a symmetric reciprocal two-port:
shunt r_p at each port and a series branch of an ideal lossless line
with r_s split equally at its two ends (Pi topology, isolated here so
alternatives are one-function swaps).  Edge oscillators carry an extra monopole load that mirrors the
missing neighbor, so the array coupling matrix is tridiagonal with a
uniform diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class CouplingParams:
    """Two-port element values.

    z_o : line characteristic impedance (ohms)
    psi_o : electrical length at the reference frequency (radians)
    f_ref : reference frequency (hertz)
    r_s : series resistance (ohms)
    r_p : shunt resistance at each port (ohms)
    """

    z_o: float
    psi_o: float
    f_ref: float
    r_s: float
    r_p: float

    def __post_init__(self):
        for name in ("z_o", "psi_o", "f_ref", "r_s", "r_p"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def omega_ref(self) -> float:
        return 2.0 * math.pi * self.f_ref

    def electrical_length(self, omega: float) -> float:
        """Line length in radians at omega (non-dispersive scaling)."""
        return self.psi_o * omega / self.omega_ref


def coupling_two_port(cp: CouplingParams, omega: float) -> tuple[complex, complex]:
    """(Y11, Y12) of the coupling network at omega.

    The series-branch ABCD entries (r_s/2 at each end of the line) are
    formed before inversion, so the pure line's singularities at odd
    multiples of pi stay regularized.  Y22 = Y11 and Y21 = Y12 by
    symmetry and reciprocity at every frequency.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    return kernels.coupling_two_port(
        cp.z_o, cp.psi_o, cp.omega_ref, cp.r_s, cp.r_p, omega)


def coupling_matrix(cp: CouplingParams, n: int, omega: float) -> np.ndarray:
    """Tridiagonal N x N array coupling matrix at omega.

    Off-diagonal entries are the transfer admittance Y12 of one network;
    every diagonal entry is 2*Y11 (inner oscillators see Y11 from both
    neighbors, edge oscillators see one network plus the symmetry load).
    """
    if n < 2:
        raise ValueError(f"array size n = {n} must be at least 2")
    y11, y12 = coupling_two_port(cp, omega)
    c = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(c, 2.0 * y11)
    idx = np.arange(n - 1)
    c[idx, idx + 1] = y12
    c[idx + 1, idx] = y12
    return c
