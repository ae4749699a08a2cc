"""Exact first-harmonic reference solutions and curve comparison.

The linearized models are judged against the same coupled KCL system
with the analytic oscillator admittance evaluated directly (no Taylor
model), the desk-scale stand-in for a circuit-level reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oscillator import OscillatorModel
from .solver import (ArraySpec, InjectionSource, SweepResult,
                     SynchronizedSolution, solve_constant_phase, sweep_phase)


def _require_oracles(spec: ArraySpec) -> None:
    for i, model in enumerate(spec.models):
        if not isinstance(model, OscillatorModel):
            raise TypeError(
                f"oscillator {i}: exact solves need a direct oracle model, "
                f"got {type(model).__name__}")


def exact_sync_solve(spec: ArraySpec, inj: InjectionSource | None,
                     delta_phi: float,
                     guess: SynchronizedSolution | None = None,
                     tol: float = 1e-9,
                     max_iter: int = 50) -> SynchronizedSolution:
    """Solve the coupled system with the full nonlinear admittance.

    Same unknowns, constraints and tolerances as the piecewise solve;
    no sample intervals are involved (k_vec reports -1).
    """
    _require_oracles(spec)
    return solve_constant_phase(spec, inj, delta_phi, guess=guess,
                                tol=tol, max_iter=max_iter)


def exact_sweep(spec: ArraySpec, inj: InjectionSource | None, dphi_values,
                tol: float = 1e-9, max_iter: int = 50) -> SweepResult:
    """Continuation of the exact system over delta_phi."""
    _require_oracles(spec)
    return sweep_phase(spec, inj, dphi_values, tol=tol, max_iter=max_iter)


@dataclass(frozen=True)
class CurveComparison:
    """Error metrics between two sweep curves on their common domain."""

    max_abs_eta_error: float
    rms_eta_error: float
    max_rel_freq_error: float
    points: int

    def __post_init__(self):
        if min(self.max_abs_eta_error, self.rms_eta_error,
               self.max_rel_freq_error, self.points) < 0:
            raise ValueError("comparison metrics must be non-negative")


def compare_curves(curve_a: SweepResult, curve_b: SweepResult) -> CurveComparison:
    """Resample both curves on the overlap of their parameter ranges
    (linear interpolation at the union of sweep points) and compute the
    tuning-voltage and frequency error metrics."""
    pa, pb = curve_a.params, curve_b.params
    if pa.size < 2 or pb.size < 2:
        raise ValueError("both curves need at least two converged points")
    lo = max(pa.min(), pb.min())
    hi = min(pa.max(), pb.max())
    if hi <= lo:
        raise ValueError(
            f"sweep domains [{pa.min():.4g}, {pa.max():.4g}] and "
            f"[{pb.min():.4g}, {pb.max():.4g}] do not overlap")
    grid = np.union1d(pa, pb)
    grid = grid[(grid >= lo) & (grid <= hi)]

    n = len(curve_a.points[0].solution.eta)
    if n != len(curve_b.points[0].solution.eta):
        raise ValueError("curves describe arrays of different size")

    max_eta = 0.0
    sq_sum = 0.0
    count = 0
    for i in range(n):
        ea = np.interp(grid, pa, curve_a.eta(i))
        eb = np.interp(grid, pb, curve_b.eta(i))
        err = np.abs(ea - eb)
        max_eta = max(max_eta, float(err.max()))
        sq_sum += float(np.sum(err * err))
        count += grid.size
    wa = np.interp(grid, pa, curve_a.omega_s)
    wb = np.interp(grid, pb, curve_b.omega_s)
    max_freq = float(np.max(np.abs(wa - wb) / np.abs(wb)))
    return CurveComparison(
        max_abs_eta_error=max_eta,
        rms_eta_error=math.sqrt(sq_sum / count),
        max_rel_freq_error=max_freq,
        points=int(grid.size),
    )
