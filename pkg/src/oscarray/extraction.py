"""Free-running sampling and piecewise-linear admittance models.

Each oscillator's characteristic is sampled on a tuning-voltage grid:
every grid point gets a free-running solve (Y = 0) plus central-difference
admittance derivatives and the injection sensitivities.  The ordered
samples form the piecewise model used by the array solver; a single
sample anchors the non-piecewise variant.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py as _k
from .errors import (ConvergenceError, NoOscillationError,
                     SingularJacobianError, TuningRangeError)
from .oscillator import OscillatorModel

FREE_RUNNING_TOL = 1e-12  # siemens; well inside the 1e-10 sample contract
SAMPLE_RESIDUAL_LIMIT = 1e-10

# Relative jump between adjacent samples that flags a suspect grid
# (bifurcation straddling); smooth tuning characteristics stay far
# below this.
CONTINUITY_SANITY_FACTOR = 0.2


@dataclass(frozen=True)
class FdSteps:
    """Central-difference steps for the derivative extraction.

    rel_v and rel_omega scale with the free-running point; abs_eta is in
    volts.  richardson_tol flags cancellation: the h and h/2 estimates
    must agree to this relative level or the sample gets a warning.
    """

    rel_v: float = 1e-4
    rel_omega: float = 1e-6
    abs_eta: float = 1e-3
    richardson_tol: float = 1e-3


@dataclass(frozen=True)
class SamplingGrid:
    """Strictly increasing tuning voltages; p >= 2 for piecewise models."""

    eta_values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(e) for e in self.eta_values)
        object.__setattr__(self, "eta_values", vals)
        if len(vals) < 1:
            raise ValueError("grid needs at least one point")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid voltages must be strictly increasing")

    @classmethod
    def linspace(cls, start: float, stop: float, points: int) -> "SamplingGrid":
        if points < 2:
            raise ValueError("linspace grid needs at least two points")
        return cls(tuple(np.linspace(start, stop, points)))

    def __len__(self):
        return len(self.eta_values)


@dataclass(frozen=True)
class AdmittanceSample:
    """Free-running point and first-order model data at one tuning voltage.

    y_v, y_omega, y_eta are the admittance derivatives (S/V, S*s/rad,
    S/V); i_g1 and i_gm1 the injection-phasor sensitivities.  warnings
    carries extraction diagnostics (e.g. suspect finite-difference steps).
    """

    eta_c: float
    v_o: float
    omega_o: float
    y_v: complex
    y_omega: complex
    y_eta: complex
    i_g1: complex
    i_gm1: complex
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.v_o <= 0 or self.omega_o <= 0:
            raise ValueError("free-running amplitude and frequency must be positive")
        # Snap omega_o (< 1 ulp) so omega -> f_o_hz -> omega round-trips
        # exactly: sample tables store hertz and re-imports must be
        # bit-identical.
        omega = self.omega_o
        for _ in range(4):
            again = 2.0 * math.pi * (omega / (2.0 * math.pi))
            if again == omega:
                break
            omega = again
        else:
            raise ValueError("omega_o does not stabilize under Hz round-trip")
        object.__setattr__(self, "omega_o", omega)

    @property
    def f_o(self) -> float:
        return self.omega_o / (2.0 * math.pi)


def _linear_admittance(s: AdmittanceSample, v, omega, eta) -> complex:
    return (s.y_v * (v - s.v_o)
            + s.y_omega * (omega - s.omega_o)
            + s.y_eta * (eta - s.eta_c))


@dataclass(frozen=True)
class PiecewiseModel:
    """Ordered admittance samples with left-closed interval lookup."""

    samples: tuple[AdmittanceSample, ...]
    sanity_factor: float = CONTINUITY_SANITY_FACTOR

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ValueError(
                "a piecewise model needs at least two samples; build a "
                "NonPwModel from a single one")
        etas = [s.eta_c for s in self.samples]
        if any(b <= a for a, b in zip(etas, etas[1:])):
            raise ValueError("samples must be sorted by eta_c without duplicates")
        for a, b in zip(self.samples, self.samples[1:]):
            dv = abs(b.v_o - a.v_o) / a.v_o
            dw = abs(b.omega_o - a.omega_o) / a.omega_o
            if dv > self.sanity_factor or dw > self.sanity_factor:
                raise ValueError(
                    f"free-running point jumps by {max(dv, dw):.3g} (rel) "
                    f"between eta={a.eta_c:.6g} and {b.eta_c:.6g} V; grid "
                    "may straddle a bifurcation")

    @property
    def eta_min(self) -> float:
        return self.samples[0].eta_c

    @property
    def eta_max(self) -> float:
        return self.samples[-1].eta_c

    @property
    def eta_grid(self) -> np.ndarray:
        return np.array([s.eta_c for s in self.samples])

    def locate(self, eta: float) -> int:
        """Index k with eta in [eta_k, eta_{k+1}); eta_max maps to the
        last interval.  Raises TuningRangeError outside the range."""
        grid = self.eta_grid
        k = _k.locate_interval(grid, 0, len(grid), eta)
        if k < 0:
            raise TuningRangeError(eta, self.eta_min, self.eta_max)
        return k

    def anchor(self, eta: float, nearest: bool = False) -> int:
        """Sample index anchoring the Taylor expansion at eta."""
        k = self.locate(eta)
        if nearest and k + 1 < len(self.samples):
            if eta - self.samples[k].eta_c > self.samples[k + 1].eta_c - eta:
                k += 1
        return k

    def admittance(self, v: float, omega: float, eta: float,
                   nearest: bool = False) -> complex:
        """Piecewise-linear admittance at (v, omega, eta)."""
        return _linear_admittance(self.samples[self.anchor(eta, nearest)],
                                  v, omega, eta)

    def free_running(self, eta: float) -> tuple[float, float]:
        """Linearly interpolated free-running (V, omega) at eta."""
        k = self.locate(eta)
        a, b = self.samples[k], self.samples[min(k + 1, len(self.samples) - 1)]
        if b.eta_c == a.eta_c:
            return a.v_o, a.omega_o
        t = (eta - a.eta_c) / (b.eta_c - a.eta_c)
        return (a.v_o + t * (b.v_o - a.v_o),
                a.omega_o + t * (b.omega_o - a.omega_o))


@dataclass(frozen=True)
class NonPwModel:
    """Single-point linearization, valid (if increasingly inaccurate)
    arbitrarily far from its anchor."""

    sample: AdmittanceSample

    @property
    def eta_c(self) -> float:
        return self.sample.eta_c

    def admittance(self, v: float, omega: float, eta: float) -> complex:
        return _linear_admittance(self.sample, v, omega, eta)

    def free_running(self, eta: float) -> tuple[float, float]:
        return self.sample.v_o, self.sample.omega_o


def pw_admittance(pwm, v: float, omega: float, eta: float) -> complex:
    """Linearized admittance of a PiecewiseModel or NonPwModel."""
    return pwm.admittance(v, omega, eta)


def locate_interval(pwm: PiecewiseModel, eta: float) -> int:
    """Active interval index of eta in the model's sampling range."""
    return pwm.locate(eta)


def solve_free_running(osc: OscillatorModel, eta: float,
                       guess: tuple[float, float] | None = None,
                       tol: float = FREE_RUNNING_TOL,
                       max_iter: int = 60) -> tuple[float, float]:
    """Damped 2-D Newton on Re/Im Y(V, omega, eta) = 0.

    Returns (v_o, omega_o) with |Y| below tol.  The guess defaults to
    the oscillator's closed-form start point when it provides one.
    """
    if guess is None:
        if hasattr(osc, "free_running_guess"):
            guess = osc.free_running_guess(eta)
        else:
            raise ValueError("oscillator provides no default guess; pass one")
    v, omega = float(guess[0]), float(guess[1])
    if v <= 0 or omega <= 0:
        raise ValueError("guess amplitude and frequency must be positive")

    # Small-signal check: positive net conductance at vanishing amplitude
    # means the limit cycle does not exist.
    if osc.admittance(1e-9 * v, omega, eta).real >= 0:
        raise NoOscillationError(
            f"net small-signal conductance at eta={eta:.6g} V is "
            "non-negative; no oscillation to extract")

    y = osc.admittance(v, omega, eta)
    norm = abs(y)
    for _ in range(max_iter):
        if norm < tol:
            return v, omega
        h_v = 1e-7 * v
        h_w = 1e-9 * omega
        dy_dv = (osc.admittance(v + h_v, omega, eta)
                 - osc.admittance(v - h_v, omega, eta)) / (2.0 * h_v)
        dy_dw = (osc.admittance(v, omega + h_w, eta)
                 - osc.admittance(v, omega - h_w, eta)) / (2.0 * h_w)
        det = dy_dv.real * dy_dw.imag - dy_dw.real * dy_dv.imag
        scale = max(abs(dy_dv) * abs(dy_dw), 1e-300)
        if abs(det) < 1e-14 * scale:
            raise SingularJacobianError(
                f"free-running Jacobian singular at eta={eta:.6g} V")
        dv = (-y.real * dy_dw.imag + y.imag * dy_dw.real) / det
        dw = (-dy_dv.real * y.imag + dy_dv.imag * y.real) / det
        step = 1.0
        for _ in range(9):  # full step plus up to 8 halvings
            v_n, w_n = v + step * dv, omega + step * dw
            if v_n > 0 and w_n > 0:
                y_n = osc.admittance(v_n, w_n, eta)
                if abs(y_n) < norm:
                    break
            step *= 0.5
        else:
            raise ConvergenceError(
                f"free-running solve stalled at eta={eta:.6g} V",
                state=(v, omega), residual_norm=norm)
        v, omega, y, norm = v_n, w_n, y_n, abs(y_n)
    if norm < tol:
        return v, omega
    raise ConvergenceError(
        f"free-running solve did not converge at eta={eta:.6g} V",
        state=(v, omega), residual_norm=norm)


def _central(f, x: float, h: float) -> complex:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def sample_derivatives(osc: OscillatorModel, v_o: float, omega_o: float,
                       eta: float, steps: FdSteps = FdSteps()) -> AdmittanceSample:
    """Central-difference derivatives of Y about a free-running point.

    The point must already satisfy the free-running residual contract.
    Each derivative is re-estimated at half step; disagreement beyond
    steps.richardson_tol attaches a warning instead of failing.
    """
    resid = abs(osc.admittance(v_o, omega_o, eta))
    if resid > SAMPLE_RESIDUAL_LIMIT:
        raise ValueError(
            f"point (V={v_o:.6g}, f={omega_o / 2 / math.pi:.6g}) at "
            f"eta={eta:.6g} V is not free-running: |Y| = {resid:.3e} S")

    warnings: list[str] = []

    def diff(f, x, h, label):
        d1 = _central(f, x, h)
        d2 = _central(f, x, 0.5 * h)
        ref = max(abs(d2), 1e-300)
        if abs(d1 - d2) / ref > steps.richardson_tol:
            warnings.append(
                f"{label} derivative step suspect: h and h/2 estimates "
                f"differ by {abs(d1 - d2) / ref:.2e} (rel)")
        return d2

    y_v = diff(lambda x: osc.admittance(x, omega_o, eta),
               v_o, steps.rel_v * v_o, "amplitude")
    y_omega = diff(lambda x: osc.admittance(v_o, x, eta),
                   omega_o, steps.rel_omega * omega_o, "frequency")
    # Bias the eta stencil inward at the eta >= 0 domain edge.
    h_e = steps.abs_eta
    if eta - h_e < 0:
        h_e = 0.5 * eta if eta > 0 else 0.0
    if h_e > 0:
        y_eta = diff(lambda x: osc.admittance(v_o, omega_o, x),
                     eta, h_e, "tuning")
    else:
        h = steps.abs_eta
        y_eta = (osc.admittance(v_o, omega_o, eta + h)
                 - osc.admittance(v_o, omega_o, eta)) / h
        warnings.append("tuning derivative one-sided at eta = 0")

    i_g1, i_gm1 = osc.injection_derivatives(v_o, omega_o, eta)
    return AdmittanceSample(eta, v_o, omega_o, y_v, y_omega, y_eta,
                            i_g1, i_gm1, tuple(warnings))


def extract_piecewise(osc: OscillatorModel, grid: SamplingGrid,
                      steps: FdSteps = FdSteps()) -> PiecewiseModel:
    """Sample the free-running characteristic over the grid.

    Sequential by contract: each solve warm-starts from the previous
    grid point, which dominates any gain from parallel evaluation.
    """
    if len(grid) < 2:
        raise ValueError(
            "piecewise extraction needs p >= 2 grid points; use "
            "solve_free_running + sample_derivatives for a NonPwModel")
    samples = []
    guess = None
    for eta in grid.eta_values:
        try:
            v_o, omega_o = solve_free_running(osc, eta, guess)
        except (ConvergenceError, NoOscillationError) as exc:
            raise ConvergenceError(
                f"extraction failed at grid point eta={eta:.6g} V: {exc}"
            ) from exc
        samples.append(sample_derivatives(osc, v_o, omega_o, eta, steps))
        guess = (v_o, omega_o)
    return PiecewiseModel(tuple(samples))


def extract_non_pw(osc: OscillatorModel, eta_c: float,
                   steps: FdSteps = FdSteps()) -> NonPwModel:
    """Single-point linearization about the free-running solution at eta_c."""
    v_o, omega_o = solve_free_running(osc, eta_c)
    return NonPwModel(sample_derivatives(osc, v_o, omega_o, eta_c, steps))


# ---------------------------------------------------------------------------
# Sample-table CSV: the import path for externally extracted characteristics.

SAMPLE_TABLE_COLUMNS = (
    "eta_c_v", "v_o_v", "f_o_hz",
    "y_v_re", "y_v_im", "y_omega_re", "y_omega_im", "y_eta_re", "y_eta_im",
    "i_g1_re", "i_g1_im", "i_gm1_re", "i_gm1_im",
    "i_gr_re", "i_gr_im", "i_gi_re", "i_gi_im",
)


def _fmt(x: float) -> str:
    # 17 significant digits: exact float64 round trip, so an exported
    # table re-imports to bit-identical models.
    return f"{x:.17g}"


def write_sample_table(model, path_or_file) -> None:
    """Write a PiecewiseModel or NonPwModel as a 17-column CSV."""
    samples = model.samples if isinstance(model, PiecewiseModel) else (model.sample,)
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(",".join(SAMPLE_TABLE_COLUMNS) + "\n")
        for s in samples:
            i_gr = s.i_g1 + s.i_gm1
            i_gi = 1j * (s.i_g1 - s.i_gm1)
            row = (s.eta_c, s.v_o, s.omega_o / (2.0 * math.pi),
                   s.y_v.real, s.y_v.imag,
                   s.y_omega.real, s.y_omega.imag,
                   s.y_eta.real, s.y_eta.imag,
                   s.i_g1.real, s.i_g1.imag,
                   s.i_gm1.real, s.i_gm1.imag,
                   i_gr.real, i_gr.imag, i_gi.real, i_gi.imag)
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    finally:
        if own:
            fh.close()


def read_sample_table(path_or_file):
    """Read a sample-table CSV; one row gives a NonPwModel, more a
    PiecewiseModel.  The stored chain-rule pairs must be consistent."""
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "r", newline="") if own else path_or_file
    try:
        header = fh.readline().strip()
        cols = tuple(c.strip() for c in header.split(","))
        if cols != SAMPLE_TABLE_COLUMNS:
            raise ValueError(
                f"bad sample-table header: expected "
                f"{','.join(SAMPLE_TABLE_COLUMNS)!r}, got {header!r}")
        samples = []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(SAMPLE_TABLE_COLUMNS):
                raise ValueError(
                    f"line {ln}: expected {len(SAMPLE_TABLE_COLUMNS)} "
                    f"columns, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise ValueError(f"line {ln}: {exc}") from None
            (eta_c, v_o, f_o, yvr, yvi, ywr, ywi, yer, yei,
             g1r, g1i, gm1r, gm1i, grr, gri, gir, gii) = vals
            i_g1 = complex(g1r, g1i)
            i_gm1 = complex(gm1r, gm1i)
            i_gr = complex(grr, gri)
            i_gi = complex(gir, gii)
            ref = max(abs(i_gr), abs(i_gi), 1.0)
            if (abs(i_g1 - 0.5 * (i_gr - 1j * i_gi)) > 1e-9 * ref
                    or abs(i_gm1 - 0.5 * (i_gr + 1j * i_gi)) > 1e-9 * ref):
                raise ValueError(
                    f"line {ln}: stored injection sensitivities violate "
                    "the chain-rule identities")
            samples.append(AdmittanceSample(
                eta_c, v_o, 2.0 * math.pi * f_o,
                complex(yvr, yvi), complex(ywr, ywi), complex(yer, yei),
                i_g1, i_gm1))
    finally:
        if own:
            fh.close()
    if not samples:
        raise ValueError("sample table holds no rows")
    if len(samples) == 1:
        return NonPwModel(samples[0])
    return PiecewiseModel(tuple(samples))
