"""Perturbation stability of synchronized solutions.

Amplitude and phase perturbations around a converged solution obey the
LTI system  d/dt [dv; dphi] = A(delta_phi) [dv; dphi].  A is built by
unit-perturbation probing of the steady residual's directional
derivatives: for each probe, the complex rate S_i = -dR_i / (Y_iw V_i)
yields dphi_i' = Re S_i and dv_i' = -V_i Im S_i.  The solution is stable
when every eigenvalue except the autonomous zero mode (free-running
case) has a negative real part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .coupling import coupling_matrix
from .errors import InconsistencyError, SingularModelError
from .solver import (ArraySpec, InjectionSource, NO_INJECTION, SweepResult,
                     SynchronizedSolution, inverse_chain_rule, model_terms,
                     solve_constant_phase)

ZERO_MODE_TOL_REL = 1e-6
STABILITY_MARGIN_REL = 1e-9
_Y_OMEGA_DEGENERACY = 1e-30


@dataclass(frozen=True)
class StabilityMatrix:
    """Real 2N x 2N perturbation matrix in normalized time tau = w_ref t,
    ordered [dv_1..dv_N, dphi_1..dphi_N]."""

    a: np.ndarray
    omega_ref: float

    def __post_init__(self):
        arr = np.array(self.a, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2:
            raise ValueError("stability matrix must be square of even size")
        if not np.all(np.isfinite(arr)):
            raise ValueError("stability matrix has non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "a", arr)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.a))


@dataclass(frozen=True)
class StabilityResult:
    """Spectrum and verdict for one synchronized solution."""

    eigenvalues: np.ndarray
    max_re_nonstructural: float
    structural_zero_present: bool
    stable: bool

    def __post_init__(self):
        arr = np.array(self.eigenvalues, dtype=complex)
        arr.flags.writeable = False
        object.__setattr__(self, "eigenvalues", arr)


def assemble_stability_matrix(spec: ArraySpec, inj: InjectionSource | None,
                              sol: SynchronizedSolution) -> StabilityMatrix:
    """Perturbation matrix A at a converged solution.

    Columns come from unit perturbations of each amplitude and phase:
    the directional derivative of the residual field (admittance,
    coupling and injection terms; the frequency-derivative term supplies
    the time derivatives) is transformed by S_i = -dR_i/(Y_iw V_i).
    """
    inj = inj or NO_INJECTION
    n = spec.n
    v = sol.v
    phi = sol.phi
    c = coupling_matrix(spec.coupling, n, sol.omega_s)
    terms = [model_terms(spec, i, v[i], sol.omega_s, sol.eta[i])
             for i in range(n)]
    for i, t in enumerate(terms):
        if abs(t.y_omega) < _Y_OMEGA_DEGENERACY:
            raise SingularModelError(
                f"oscillator {i} has no frequency sensitivity "
                f"(|y_omega| = {abs(t.y_omega):.3e})")

    rot = np.exp(1j * (phi[None, :] - phi[:, None]))  # rot[i, j] = e^{j(phi_j - phi_i)}

    # dR[i, col] for unit perturbations, col < n amplitudes, col >= n phases.
    dr = np.zeros((n, 2 * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            dr[i, j] = c[i, j] * rot[i, j]
            if j != i:
                dr[i, n + j] = 1j * c[i, j] * v[j] * rot[i, j]
        dr[i, i] += terms[i].ylin + terms[i].y_v * v[i]
        acc = 0j
        for nn in range(n):
            if nn != i:
                acc += c[i, nn] * v[nn] * rot[i, nn]
        dr[i, n + i] = -1j * acc
        if i == spec.q and inj.present:
            i_gr, i_gi = inverse_chain_rule(terms[i].i_g1, terms[i].i_gm1)
            d = inj.theta_s - phi[i]
            dr[i, n + i] += inj.i_s * (i_gr * math.sin(d)
                                       - i_gi * math.cos(d))

    a = np.empty((2 * n, 2 * n))
    for i in range(n):
        s_row = -dr[i, :] / (terms[i].y_omega * v[i])
        a[i, :] = -v[i] * s_row.imag
        a[n + i, :] = s_row.real
    a /= spec.coupling.omega_ref
    return StabilityMatrix(a, spec.coupling.omega_ref)


def eigenvalues(m: StabilityMatrix | np.ndarray) -> np.ndarray:
    """All eigenvalues of the (real) perturbation matrix.

    Delegates to LAPACK's balanced Hessenberg-QR driver and checks that
    the returned spectrum is closed under conjugation.
    """
    a = m.a if isinstance(m, StabilityMatrix) else np.asarray(m, dtype=float)
    eigs = scipy.linalg.eigvals(a)
    scale = max(float(np.max(np.abs(eigs))), 1e-300)
    by_key = np.sort_complex(eigs)
    conj_key = np.sort_complex(eigs.conj())
    if np.max(np.abs(by_key - conj_key)) > 1e-8 * scale:
        raise InconsistencyError(
            "spectrum of a real matrix is not conjugation-closed")
    # Descending real part: the dominant poles lead.
    order = np.lexsort((eigs.imag, -eigs.real))
    return eigs[order]


def classify_stability(eigs, free_running: bool, a_norm: float,
                       zero_tol_rel: float = ZERO_MODE_TOL_REL,
                       margin_rel: float = STABILITY_MARGIN_REL) -> StabilityResult:
    """Stability verdict from a spectrum.

    In the free-running case the single eigenvalue nearest zero is the
    structural autonomy mode; it must lie within the zero tolerance and
    is excluded from the verdict.  a_norm sets the absolute scale of the
    tolerances (Frobenius norm of A).
    """
    eigs = np.asarray(eigs, dtype=complex)
    zero_tol = zero_tol_rel * a_norm
    margin = margin_rel * a_norm
    if free_running:
        idx = int(np.argmin(np.abs(eigs)))
        if abs(eigs[idx]) >= zero_tol:
            raise InconsistencyError(
                f"free-running solution lacks a structural zero mode: "
                f"min |lambda| = {abs(eigs[idx]):.3e} vs tolerance "
                f"{zero_tol:.3e}")
        rest = np.delete(eigs, idx)
        structural = True
    else:
        rest = eigs
        structural = bool(np.min(np.abs(eigs)) < zero_tol)
    max_re = float(np.max(rest.real))
    return StabilityResult(
        eigenvalues=eigs,
        max_re_nonstructural=max_re,
        structural_zero_present=structural,
        stable=bool(max_re < -margin),
    )


def solution_stability(spec: ArraySpec, inj: InjectionSource | None,
                       sol: SynchronizedSolution) -> StabilityResult:
    """Assemble, decompose and classify in one step."""
    inj = inj or NO_INJECTION
    m = assemble_stability_matrix(spec, inj, sol)
    return classify_stability(eigenvalues(m), not inj.present, m.norm)


@dataclass(frozen=True)
class TracePoint:
    param: float
    eigenvalues: np.ndarray
    stable: bool


@dataclass
class StableRangeResult:
    """Refined stable intervals plus the per-point pole trace."""

    intervals: list[tuple[float, float]] = field(default_factory=list)
    trace: list[TracePoint] = field(default_factory=list)


def stable_range(spec: ArraySpec, inj: InjectionSource | None,
                 sweep: SweepResult, resolution: float = 1e-3,
                 tol: float = 1e-9, max_iter: int = 50,
                 jobs: int = 1) -> StableRangeResult:
    """Classify a sweep and refine the stability boundaries.

    Every converged sweep point is classified; boundaries between a
    stable and an unstable neighbor are bisected (re-solving at the
    midpoint, warm-started from the nearer solution) down to the given
    delta-phi resolution.  Sweep gaps split intervals.
    """
    inj = inj or NO_INJECTION
    free = not inj.present

    def classify_sol(sol):
        m = assemble_stability_matrix(spec, inj, sol)
        eigs = eigenvalues(m)
        return eigs, classify_stability(eigs, free, m.norm).stable

    points = sweep.points
    if not points:
        raise ValueError("sweep holds no converged points")

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as ex:
            classified = list(ex.map(
                lambda p: classify_sol(p.solution), points))
    else:
        classified = [classify_sol(p.solution) for p in points]

    result = StableRangeResult()
    for p, (eigs, ok) in zip(points, classified):
        result.trace.append(TracePoint(p.param, eigs, ok))

    gapset = sorted(sweep.gaps)

    def has_gap(a, b):
        return any(a < g < b for g in gapset)

    def refine(p_lo, sol_lo, st_lo, p_hi, sol_hi, st_hi):
        # invariant: st_lo != st_hi; returns the crossing parameter
        while abs(p_hi - p_lo) > resolution:
            mid = 0.5 * (p_lo + p_hi)
            warm = sol_lo if abs(mid - p_lo) <= abs(mid - p_hi) else sol_hi
            try:
                sol_mid = solve_constant_phase(spec, inj, mid, guess=warm,
                                               tol=tol, max_iter=max_iter)
                _, st_mid = classify_sol(sol_mid)
            except Exception:
                break
            if st_mid == st_lo:
                p_lo, sol_lo = mid, sol_mid
            else:
                p_hi, sol_hi = mid, sol_mid
        return 0.5 * (p_lo + p_hi)

    open_start: float | None = None
    for idx, (pt, (eigs, ok)) in enumerate(zip(points, classified)):
        prev = points[idx - 1] if idx > 0 else None
        prev_ok = classified[idx - 1][1] if idx > 0 else None
        if prev is not None and has_gap(prev.param, pt.param):
            if open_start is not None:
                result.intervals.append((open_start, prev.param))
                open_start = None
            prev = None  # gap breaks continuity: no boundary refinement
        if ok and open_start is None:
            start = pt.param
            if prev is not None and prev_ok is False:
                start = refine(prev.param, prev.solution, False,
                               pt.param, pt.solution, True)
            open_start = start
        elif not ok and open_start is not None:
            end = pt.param
            if prev is not None and prev_ok is True:
                end = refine(prev.param, prev.solution, True,
                             pt.param, pt.solution, False)
            result.intervals.append((open_start, end))
            open_start = None
    if open_start is not None:
        result.intervals.append((open_start, points[-1].param))
    return result


def write_stability_csv(rng: StableRangeResult, path_or_file, n: int) -> None:
    """Pole trace as CSV: delta_phi, re/im of all 2N eigenvalues
    (descending real part), stable flag."""
    import os

    cols = ["delta_phi_rad"]
    for i in range(2 * n):
        cols += [f"lambda_{i + 1}_re", f"lambda_{i + 1}_im"]
    cols.append("stable")
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(",".join(cols) + "\n")
        for tp in rng.trace:
            fields = [f"{tp.param:.11e}"]
            for lam in tp.eigenvalues:
                fields += [f"{lam.real:.11e}", f"{lam.imag:.11e}"]
            fields.append("1" if tp.stable else "0")
            fh.write(",".join(fields) + "\n")
    finally:
        if own:
            fh.close()
