"""Coupled first-harmonic system: assembly, Newton solve, continuation.

The synchronized array is described by N complex KCL residuals in the
2N real unknowns {V_1..V_N, eta_i (i != q), omega_s}; phases are fixed
by the constant phase shift and the gauge phi_q = 0, and eta_q is held
at a chosen value.  The active piecewise interval of every oscillator
is re-determined at each residual evaluation, so Newton steps may cross
sample boundaries freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coupling import CouplingParams, coupling_matrix
from .errors import (ConvergenceError, InnerSolveError,
                     SingularJacobianError, TuningRangeError)
from .extraction import NonPwModel, PiecewiseModel, solve_free_running
from .oscillator import OscillatorModel, VdpOscillator, inverse_chain_rule

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 50
_FD_STEP = 1e-7
_MAX_HALVINGS = 8


@dataclass(frozen=True)
class InjectionSource:
    """External current source I_s cos(w_s t + theta_s) at oscillator q.

    i_s = 0 represents the free-running regime.
    """

    i_s: float = 0.0
    theta_s: float = 0.0

    def __post_init__(self):
        if self.i_s < 0:
            raise ValueError("injection amplitude must be non-negative")

    @property
    def present(self) -> bool:
        return self.i_s > 0.0


NO_INJECTION = InjectionSource()


@dataclass(frozen=True)
class ArraySpec:
    """The coupled array: per-oscillator models, coupling network, and
    the reference oscillator q whose tuning voltage eta_q is held fixed.

    models may mix PiecewiseModel, NonPwModel and direct OscillatorModel
    oracles.  q is a 0-based index.  anchor selects the Taylor anchor of
    piecewise models ("left" per the interval convention, or "nearest").
    pin_inner holds the tuning voltages of non-outermost oscillators at
    eta_q (N > 3 option); the resulting rectangular Newton steps are
    least-squares.
    """

    models: tuple
    coupling: CouplingParams
    q: int
    eta_q: float
    anchor: str = "left"
    pin_inner: bool = False

    def __post_init__(self):
        n = len(self.models)
        if n < 2:
            raise ValueError("an array needs at least two oscillators")
        if not 0 <= self.q < n:
            raise ValueError(f"q = {self.q} outside 0..{n - 1}")
        if self.anchor not in ("left", "nearest"):
            raise ValueError("anchor must be 'left' or 'nearest'")
        for i, model in enumerate(self.models):
            if isinstance(model, PiecewiseModel):
                if not model.eta_min <= self.eta_q <= model.eta_max:
                    raise ValueError(
                        f"eta_q = {self.eta_q:.6g} V outside the sampling "
                        f"range of oscillator {i}")
            elif not isinstance(model, (NonPwModel, OscillatorModel)):
                raise TypeError(
                    f"oscillator {i}: unsupported model type {type(model)!r}")

    @property
    def n(self) -> int:
        return len(self.models)

    def phases(self, delta_phi: float) -> np.ndarray:
        """Constant-phase-shift ladder with the gauge phi_q = 0."""
        return (np.arange(self.n) - self.q) * delta_phi


@dataclass(frozen=True)
class SynchronizedSolution:
    """One synchronized steady state of the array.

    k_vec holds the active sample index per oscillator (-1 for direct
    oracles); residual_norm is the scaled max-norm the solver converged
    to.  Arrays are read-only.
    """

    v: np.ndarray
    phi: np.ndarray
    eta: np.ndarray
    omega_s: float
    k_vec: np.ndarray
    residual_norm: float
    iterations: int = 0

    def __post_init__(self):
        for name in ("v", "phi", "eta", "k_vec"):
            arr = np.array(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def f_s(self) -> float:
        return self.omega_s / (2.0 * math.pi)

    @property
    def delta_phi(self) -> float:
        return float(self.phi[1] - self.phi[0]) if len(self.phi) > 1 else 0.0


class _Packed:
    """Flat-array view of an ArraySpec for the kernels."""

    def __init__(self, spec: ArraySpec):
        n = spec.n
        kinds = np.zeros(n, dtype=np.int32)
        offs = np.zeros(n + 1, dtype=np.int64)
        etas, vos, wos = [], [], []
        yvs, yws, yes, g1s, gm1s = [], [], [], [], []
        vdp = np.zeros((n, 8), dtype=float)
        callbacks: dict[int, OscillatorModel] = {}
        pos = 0
        for i, model in enumerate(spec.models):
            offs[i] = pos
            if isinstance(model, PiecewiseModel):
                kinds[i] = kernels.KIND_PW
                rows = model.samples
            elif isinstance(model, NonPwModel):
                kinds[i] = kernels.KIND_NONPW
                rows = (model.sample,)
            elif isinstance(model, VdpOscillator):
                kinds[i] = kernels.KIND_VDP
                vdp[i, :] = model.params.packed
                rows = ()
            else:
                kinds[i] = kernels.KIND_VDP  # placeholder; never packed
                callbacks[i] = model
                rows = ()
            for s in rows:
                etas.append(s.eta_c)
                vos.append(s.v_o)
                wos.append(s.omega_o)
                yvs.append(s.y_v)
                yws.append(s.y_omega)
                yes.append(s.y_eta)
                g1s.append(s.i_g1)
                gm1s.append(s.i_gm1)
            pos += len(rows)
        offs[n] = pos

        self.spec = spec
        self.n = n
        self.kinds = kinds
        self.offs = offs
        self.t_eta = np.array(etas, dtype=float)
        self.t_vo = np.array(vos, dtype=float)
        self.t_wo = np.array(wos, dtype=float)
        self.t_yv = np.array(yvs, dtype=complex)
        self.t_yw = np.array(yws, dtype=complex)
        self.t_ye = np.array(yes, dtype=complex)
        self.t_g1 = np.array(g1s, dtype=complex)
        self.t_gm1 = np.array(gm1s, dtype=complex)
        self.vdp = vdp
        self.callbacks = callbacks
        cp = spec.coupling
        self.cp = (cp.z_o, cp.psi_o, cp.omega_ref, cp.r_s, cp.r_p)
        self.anchor_nearest = 1 if spec.anchor == "nearest" else 0

    def residual(self, v, phi, eta, omega_s, inj: InjectionSource,
                 out_res=None, out_k=None):
        """(residuals, k_vec, status); status 0 is success."""
        if out_res is None:
            out_res = np.empty(2 * self.n)
        if out_k is None:
            out_k = np.empty(self.n, dtype=np.int64)
        if self.callbacks:
            status = self._residual_generic(v, phi, eta, omega_s, inj,
                                            out_res, out_k)
        else:
            status = kernels.eval_residual(
                self.kinds, self.offs,
                self.t_eta, self.t_vo, self.t_wo,
                self.t_yv, self.t_yw, self.t_ye, self.t_g1, self.t_gm1,
                self.vdp, *self.cp,
                np.asarray(v, dtype=float), np.asarray(phi, dtype=float),
                np.asarray(eta, dtype=float), float(omega_s),
                inj.i_s, inj.theta_s, self.spec.q,
                self.anchor_nearest, out_res, out_k)
        return out_res, out_k, status

    def _residual_generic(self, v, phi, eta, omega_s, inj, out_res, out_k):
        # Slow path for user-supplied oracle models: same assembly as the
        # kernels but with Python callbacks for the admittance.
        spec = self.spec
        n = self.n
        c = coupling_matrix(spec.coupling, n, omega_s)
        for i in range(n):
            model = spec.models[i]
            if i in self.callbacks or isinstance(model, VdpOscillator):
                osc = self.callbacks.get(i, model)
                try:
                    ylin = osc.admittance(v[i], omega_s, eta[i])
                except InnerSolveError:
                    return kernels.STATUS_INNER + i
                i_g1, i_gm1 = osc.injection_derivatives(v[i], omega_s, eta[i])
                out_k[i] = -1
            else:
                try:
                    if isinstance(model, PiecewiseModel):
                        k = model.anchor(eta[i], spec.anchor == "nearest")
                        s = model.samples[k]
                    else:
                        k = 0
                        s = model.sample
                except TuningRangeError:
                    return kernels.STATUS_RANGE + i
                ylin = (s.y_v * (v[i] - s.v_o)
                        + s.y_omega * (omega_s - s.omega_o)
                        + s.y_eta * (eta[i] - s.eta_c))
                i_g1, i_gm1 = s.i_g1, s.i_gm1
                out_k[i] = k
            r = ylin * v[i]
            for nn in range(max(0, i - 1), min(n, i + 2)):
                r += c[i, nn] * v[nn] * np.exp(1j * (phi[nn] - phi[i]))
            if i == spec.q:
                i_gr, i_gi = inverse_chain_rule(i_g1, i_gm1)
                d = inj.theta_s - phi[i]
                r += inj.i_s * (i_gr * math.cos(d) + i_gi * math.sin(d))
            out_res[2 * i] = r.real
            out_res[2 * i + 1] = r.imag
        return kernels.STATUS_OK


def _raise_status(status: int):
    if status >= kernels.STATUS_INNER:
        raise InnerSolveError(float("nan"), 100)
    i = status - kernels.STATUS_RANGE
    raise TuningRangeError(float("nan"), float("nan"), float("nan"), i)


def assemble_residual(spec: ArraySpec, inj: InjectionSource,
                      v, phi, eta, omega_s) -> np.ndarray:
    """Interleaved (Re, Im) KCL residuals for an arbitrary array state."""
    res, _, status = _Packed(spec).residual(v, phi, eta, omega_s, inj)
    if status != kernels.STATUS_OK:
        _raise_status(status)
    return res


def reference_free_running(spec: ArraySpec, i: int,
                           eta: float) -> tuple[float, float]:
    """Free-running (V, omega) of oscillator i's model at eta."""
    model = spec.models[i]
    if isinstance(model, (PiecewiseModel, NonPwModel)):
        return model.free_running(eta)
    return solve_free_running(model, eta)


@dataclass(frozen=True)
class ModelTerms:
    """Linearization data of one oscillator at an operating point."""

    ylin: complex
    y_v: complex
    y_omega: complex
    y_eta: complex
    i_g1: complex
    i_gm1: complex
    k: int


def model_terms(spec: ArraySpec, i: int, v: float, omega: float,
                eta: float) -> ModelTerms:
    """Admittance value, derivatives and injection pair of oscillator i.

    Piecewise and single-point models report their active sample data;
    direct oracles are differentiated on the spot.
    """
    model = spec.models[i]
    if isinstance(model, (PiecewiseModel, NonPwModel)):
        if isinstance(model, PiecewiseModel):
            k = model.anchor(eta, spec.anchor == "nearest")
            s = model.samples[k]
        else:
            k, s = 0, model.sample
        ylin = (s.y_v * (v - s.v_o) + s.y_omega * (omega - s.omega_o)
                + s.y_eta * (eta - s.eta_c))
        return ModelTerms(ylin, s.y_v, s.y_omega, s.y_eta, s.i_g1, s.i_gm1, k)
    ylin = model.admittance(v, omega, eta)
    h_v = 1e-6 * v
    h_w = 1e-7 * omega
    h_e = 1e-6
    y_v = (model.admittance(v + h_v, omega, eta)
           - model.admittance(v - h_v, omega, eta)) / (2 * h_v)
    y_w = (model.admittance(v, omega + h_w, eta)
           - model.admittance(v, omega - h_w, eta)) / (2 * h_w)
    y_e = (model.admittance(v, omega, eta + h_e)
           - model.admittance(v, omega, max(eta - h_e, 0.0))) / (
        h_e + min(h_e, eta))
    i_g1, i_gm1 = model.injection_derivatives(v, omega, eta)
    return ModelTerms(ylin, y_v, y_w, y_e, i_g1, i_gm1, -1)


class _Engine:
    """Damped Newton with a finite-difference Jacobian on the packed system."""

    def __init__(self, spec: ArraySpec, inj: InjectionSource,
                 delta_phi: float, tol: float, max_iter: int):
        self.spec = spec
        self.inj = inj
        self.phi = spec.phases(delta_phi)
        self.tol = tol
        self.max_iter = max_iter
        self.packed = _Packed(spec)
        n = spec.n
        if spec.pin_inner and n > 3:
            free = [i for i in (0, n - 1) if i != spec.q]
        else:
            free = [i for i in range(n) if i != spec.q]
        self.eta_idx = free
        v_ref, w_ref = reference_free_running(spec, spec.q, spec.eta_q)
        self.v_ref = v_ref
        self.w_ref = w_ref

    def default_guess(self) -> np.ndarray:
        n = self.spec.n
        x = np.empty(n + len(self.eta_idx) + 1)
        x[:n] = self.v_ref
        x[n:-1] = self.spec.eta_q
        x[-1] = 1.0  # omega_s / w_ref
        return x

    def pack_state(self, v, eta, omega_s) -> np.ndarray:
        x = np.empty(self.spec.n + len(self.eta_idx) + 1)
        x[:self.spec.n] = v
        x[self.spec.n:-1] = [eta[i] for i in self.eta_idx]
        x[-1] = omega_s / self.w_ref
        return x

    def unpack(self, x):
        n = self.spec.n
        v = x[:n]
        eta = np.full(n, self.spec.eta_q)
        for j, i in enumerate(self.eta_idx):
            eta[i] = x[n + j]
        return v, eta, x[-1] * self.w_ref

    def residual(self, x):
        """(residual vector, k_vec, ok flag)."""
        v, eta, omega_s = self.unpack(x)
        if np.any(v <= 0) or omega_s <= 0:
            return None, None, False
        res, k, status = self.packed.residual(v, self.phi, eta, omega_s,
                                              self.inj)
        if status != kernels.STATUS_OK:
            return None, None, False
        return res.copy(), k.copy(), True

    def norm(self, res) -> float:
        return float(np.max(np.abs(res))) / self.v_ref

    def jacobian(self, x, res0):
        m = len(x)
        jac = np.empty((len(res0), m))
        for j in range(m):
            h = _FD_STEP * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] = x[j] + h
            rp, _, okp = self.residual(xp)
            xm = x.copy()
            xm[j] = x[j] - h
            rm, _, okm = self.residual(xm)
            if okp and okm:
                jac[:, j] = (rp - rm) / (2.0 * h)
            elif okp:
                jac[:, j] = (rp - res0) / h
            elif okm:
                jac[:, j] = (res0 - rm) / h
            else:
                raise SingularJacobianError(
                    f"cannot difference unknown {j}: both stencil points "
                    "leave the model domain")
        return jac

    def solve(self, guess: np.ndarray | None = None):
        x = self.default_guess() if guess is None else np.asarray(
            guess, dtype=float).copy()
        res, k_vec, ok = self.residual(x)
        if not ok:
            raise TuningRangeError(
                float(x[self.spec.n]) if self.eta_idx else self.spec.eta_q,
                float("nan"), float("nan"))
        norm = self.norm(res)
        rectangular = 2 * self.spec.n > len(x)
        for it in range(1, self.max_iter + 1):
            if norm < self.tol:
                return self._solution(x, k_vec, norm, it - 1)
            jac = self.jacobian(x, res)
            try:
                if rectangular:
                    dx = np.linalg.lstsq(jac, -res, rcond=None)[0]
                else:
                    dx = np.linalg.solve(jac, -res)
            except np.linalg.LinAlgError as exc:
                raise SingularJacobianError(str(exc)) from None
            if not np.all(np.isfinite(dx)):
                raise SingularJacobianError("non-finite Newton step")
            if rectangular and np.linalg.norm(dx) < 1e-12 * max(
                    1.0, np.linalg.norm(x)):
                # pinned-tuning mode: the system is overdetermined, so
                # convergence means a stationary least-squares residual
                return self._solution(x, k_vec, norm, it - 1)
            alpha = 1.0
            accepted = False
            for _ in range(_MAX_HALVINGS + 1):
                xt = x + alpha * dx
                rt, kt, ok = self.residual(xt)
                if ok and self.norm(rt) < norm:
                    x, res, k_vec = xt, rt, kt
                    norm = self.norm(res)
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                if rectangular:
                    return self._solution(x, k_vec, norm, it - 1)
                raise ConvergenceError(
                    "Newton step rejected after 8 halvings",
                    state=self._solution(x, k_vec, norm, it),
                    residual_norm=norm)
        if norm < self.tol:
            return self._solution(x, k_vec, norm, self.max_iter)
        raise ConvergenceError(
            f"no convergence in {self.max_iter} iterations",
            state=self._solution(x, k_vec, norm, self.max_iter),
            residual_norm=norm)

    def _solution(self, x, k_vec, norm, iterations) -> SynchronizedSolution:
        v, eta, omega_s = self.unpack(x)
        return SynchronizedSolution(
            v=v.copy(), phi=self.phi.copy(), eta=eta, omega_s=float(omega_s),
            k_vec=np.asarray(k_vec, dtype=int), residual_norm=norm,
            iterations=iterations)


def solve_constant_phase(spec: ArraySpec, inj: InjectionSource | None,
                         delta_phi: float,
                         guess: SynchronizedSolution | None = None,
                         tol: float = DEFAULT_TOL,
                         max_iter: int = DEFAULT_MAX_ITER) -> SynchronizedSolution:
    """Solve the constant-phase-shift system at a fixed delta_phi.

    The residual max-norm is scaled by the reference free-running
    amplitude; convergence means scaled norm < tol.  A previous
    SynchronizedSolution warm-starts the iteration.
    """
    inj = inj or NO_INJECTION
    eng = _Engine(spec, inj, delta_phi, tol, max_iter)
    x0 = None
    if guess is not None:
        x0 = eng.pack_state(guess.v, guess.eta, guess.omega_s)
    return eng.solve(x0)


@dataclass(frozen=True)
class SweepPoint:
    param: float
    solution: SynchronizedSolution


@dataclass
class SweepResult:
    """Continuation output: converged points in sweep order plus the
    parameters that permanently failed (gaps)."""

    points: list[SweepPoint] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)
    truncated: bool = False
    diagnostic: str = ""

    @property
    def params(self) -> np.ndarray:
        return np.array([p.param for p in self.points])

    @property
    def omega_s(self) -> np.ndarray:
        return np.array([p.solution.omega_s for p in self.points])

    def eta(self, i: int) -> np.ndarray:
        return np.array([p.solution.eta[i] for p in self.points])

    def v(self, i: int) -> np.ndarray:
        return np.array([p.solution.v[i] for p in self.points])


def _continue_to(solve_at, p_from, sol_from, p_to, depth=6):
    """Warm-started solve at p_to, bisecting the parameter step on failure."""
    try:
        return solve_at(p_to, sol_from)
    except (ConvergenceError, TuningRangeError, SingularJacobianError,
            InnerSolveError):
        if depth == 0:
            raise
        mid = 0.5 * (p_from + p_to)
        sol_mid = _continue_to(solve_at, p_from, sol_from, mid, depth - 1)
        return _continue_to(solve_at, mid, sol_mid, p_to, depth - 1)


def _run_sweep(solve_at, values, max_consecutive_failures=3) -> SweepResult:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sweep grid")
    result = SweepResult()
    first = solve_at(values[0], None)  # initial failure propagates
    result.points.append(SweepPoint(float(values[0]), first))
    p_cur, sol_cur = float(values[0]), first
    consecutive = 0
    for p in values[1:]:
        p = float(p)
        try:
            sol = _continue_to(solve_at, p_cur, sol_cur, p)
        except (ConvergenceError, TuningRangeError, SingularJacobianError,
                InnerSolveError) as exc:
            result.gaps.append(p)
            consecutive += 1
            if consecutive >= max_consecutive_failures:
                result.truncated = True
                result.diagnostic = (
                    f"sweep truncated at parameter {p:.6g}: {exc}")
                break
            continue
        result.points.append(SweepPoint(p, sol))
        p_cur, sol_cur = p, sol
        consecutive = 0
    return result


def sweep_phase(spec: ArraySpec, inj: InjectionSource | None,
                dphi_values, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> SweepResult:
    """Natural-parameter continuation of the solution over delta_phi."""
    inj = inj or NO_INJECTION

    def solve_at(dphi, warm):
        return solve_constant_phase(spec, inj, dphi, guess=warm,
                                    tol=tol, max_iter=max_iter)

    return _run_sweep(solve_at, dphi_values)


def sweep_injection(spec: ArraySpec, delta_phi: float, i_s: float,
                    theta_values, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> SweepResult:
    """Continuation over the injection phase theta_s at fixed delta_phi.

    Sweeping theta_s over [0, 2 pi] traces the synchronization range:
    omega_s(theta_s) spans the locking band of the injected array.
    """
    if i_s < 0:
        raise ValueError("injection amplitude must be non-negative")

    def solve_at(theta, warm):
        return solve_constant_phase(
            spec, InjectionSource(i_s, theta), delta_phi,
            guess=warm, tol=tol, max_iter=max_iter)

    return _run_sweep(solve_at, theta_values)


def closure_defect(sweep: SweepResult) -> float:
    """Largest mismatch of any unknown between the sweep endpoints."""
    if len(sweep.points) < 2:
        raise ValueError("need at least two converged points")
    a = sweep.points[0].solution
    b = sweep.points[-1].solution
    return max(
        float(np.max(np.abs(a.v - b.v))),
        float(np.max(np.abs(a.eta - b.eta))),
        abs(a.omega_s - b.omega_s) / a.omega_s,
    )


def locking_bandwidth(sweep: SweepResult) -> float:
    """Width max - min of omega_s over the converged sweep (rad/s)."""
    w = sweep.omega_s
    if w.size == 0:
        raise ValueError("sweep holds no converged points")
    return float(w.max() - w.min())


def _num(x: float) -> str:
    return f"{x:.11e}"


def write_sweep_csv(sweep: SweepResult, path_or_file, n: int,
                    param_name: str = "delta_phi_rad",
                    model_label: str | None = None) -> None:
    """Sweep curve as CSV: one row per attempted point, converged flag 0
    on gap rows (numeric fields empty there).  model_label, when given,
    appends a `model` column tagging which admittance model produced
    the curve (used by the validation outputs)."""
    import os

    cols = [param_name, "omega_s_hz"]
    cols += [f"v_{i + 1}_v" for i in range(n)]
    cols += [f"phi_{i + 1}_rad" for i in range(n)]
    cols += [f"eta_{i + 1}_v" for i in range(n)]
    cols += [f"k_{i + 1}" for i in range(n)]
    cols += ["residual_norm", "converged"]
    if model_label is not None:
        cols.append("model")
    tail = [] if model_label is None else [model_label]
    rows = []
    for p in sweep.points:
        s = p.solution
        rows.append((p.param, [
            _num(s.omega_s / (2 * math.pi)),
            *[_num(x) for x in s.v],
            *[_num(x) for x in s.phi],
            *[_num(x) for x in s.eta],
            *[str(int(k)) for k in s.k_vec],
            _num(s.residual_norm), "1", *tail,
        ]))
    for g in sweep.gaps:
        rows.append((g, [""] * (2 + 4 * n) + ["0", *tail]))
    rows.sort(key=lambda r: r[0])
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(",".join(cols) + "\n")
        for param, fields in rows:
            fh.write(",".join([_num(param)] + fields) + "\n")
    finally:
        if own:
            fh.close()
