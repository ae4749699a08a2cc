"""Analytic Van der Pol VCO oracle.

Stand-in for probing a circuit simulator: a one-port oscillator model
that reports its first-harmonic admittance Y(V, omega, eta) and the
sensitivities of the node current to an injection source.  The cubic
current source i(v) = a v + b v^3 in parallel with L, a varactor C(eta)
and the 50-ohm output load gives closed forms for everything, which the
extraction and solver tests lean on heavily.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from . import _kernels_py as _k
from .errors import InnerSolveError, NoOscillationError


@dataclass(frozen=True)
class VaractorModel:
    """Reverse-biased junction capacitance C(eta) = c_jo/(1 + eta/v_bi)**m.

    Parameters
    ----------
    c_jo : zero-bias capacitance in farads
    m : grading exponent
    v_bi : built-in potential in volts
    """

    c_jo: float
    m: float
    v_bi: float

    def __post_init__(self):
        if self.c_jo <= 0 or self.m <= 0 or self.v_bi <= 0:
            raise ValueError("c_jo, m and v_bi must all be positive")

    def capacitance(self, eta: float) -> float:
        """Capacitance in farads at reverse tuning voltage eta >= 0."""
        if eta < 0:
            raise ValueError(
                f"eta = {eta:.6g} V < 0: forward-bias region unmodeled")
        return _k.varactor_capacitance(self.c_jo, self.m, self.v_bi, eta)

    def slope(self, eta: float) -> float:
        """dC/deta in F/V (negative: capacitance falls with bias)."""
        return -self.m * self.capacitance(eta) / (self.v_bi + eta)


def varactor_capacitance(varactor: VaractorModel, eta: float) -> float:
    """Junction capacitance of `varactor` at tuning voltage eta."""
    return varactor.capacitance(eta)


def calibrate_v_bi(c_jo: float, m: float, l: float,
                   eta_ref: float, f_ref: float) -> float:
    """Built-in potential that puts the LC resonance at f_ref for eta_ref.

    Solves C(eta_ref) = 1/(L (2 pi f_ref)^2) for v_bi; requires the
    target capacitance to be below c_jo.
    """
    omega = 2.0 * math.pi * f_ref
    c_target = 1.0 / (l * omega * omega)
    if c_target >= c_jo:
        raise ValueError(
            f"target capacitance {c_target:.4g} F not below c_jo "
            f"{c_jo:.4g} F; resonance at {f_ref:.4g} Hz is unreachable")
    return eta_ref / ((c_jo / c_target) ** (1.0 / m) - 1.0)


@dataclass(frozen=True)
class VdpParams:
    """Circuit values of one Van der Pol VCO.

    a (S, negative) and b (A/V^3, positive) define the cubic current
    source, l the tank inductance, g_load the output-load conductance
    folded into the one-port.  c_out, when set, is a series capacitance
    between the core and the array node (the load stays at the node).
    """

    a: float
    b: float
    l: float
    varactor: VaractorModel
    g_load: float
    c_out: float | None = None

    def __post_init__(self):
        if self.a >= 0:
            raise ValueError("a must be negative (active device)")
        if self.b <= 0 or self.l <= 0:
            raise ValueError("b and l must be positive")
        if self.g_load < 0:
            raise ValueError("g_load must be non-negative")
        if abs(self.a) <= self.g_load:
            raise NoOscillationError(
                f"|a| = {abs(self.a):.4g} S does not exceed g_load = "
                f"{self.g_load:.4g} S: no oscillation exists")
        if self.c_out is not None and self.c_out <= 0:
            raise ValueError("c_out must be positive when present")

    @property
    def packed(self) -> tuple[float, ...]:
        """Flat (a, b, l, c_jo, m, v_bi, c_out-or-0, g_load) for the kernels."""
        va = self.varactor
        return (self.a, self.b, self.l, va.c_jo, va.m, va.v_bi,
                0.0 if self.c_out is None else self.c_out, self.g_load)


class OscillatorModel(ABC):
    """One-port oracle: admittance plus injection-current sensitivities."""

    @abstractmethod
    def admittance(self, v: float, omega: float, eta: float) -> complex:
        """First-harmonic node admittance in siemens."""

    @abstractmethod
    def injection_derivatives(self, v: float, omega: float,
                              eta: float) -> tuple[complex, complex]:
        """Sensitivities (I_G1, I_Gm1) of the node current to the
        co- and counter-rotating injection phasors."""


class VdpOscillator(OscillatorModel):
    """Analytic oracle for :class:`VdpParams`, injection applied at the node."""

    def __init__(self, params: VdpParams):
        self.params = params

    def __repr__(self):
        return f"VdpOscillator({self.params!r})"

    def admittance(self, v: float, omega: float, eta: float) -> complex:
        return node_admittance(self.params, v, omega, eta)

    def injection_derivatives(self, v, omega, eta):
        # Current source attached directly at the node: dI/dG^r = 1,
        # dI/dG^i = j; the chain rule collapses to (1, 0).
        return (1.0 + 0j, 0j)

    def core_amplitude(self, v_node: float, omega: float, eta: float) -> float:
        """Amplitude at the core behind c_out (equals v_node without c_out)."""
        p = self.params
        if p.c_out is None:
            return v_node
        pk = p.packed
        v_core, status, last = _k.vdp_core_amplitude(
            *pk[:8], v_node, omega, eta)
        if status != _k.STATUS_OK:
            raise InnerSolveError(last, _k.CORE_AMPLITUDE_MAX_ITER)
        return v_core

    def free_running_guess(self, eta: float) -> tuple[float, float]:
        """Closed-form (V, omega) start point: exact when c_out is absent."""
        p = self.params
        v = math.sqrt(4.0 * (abs(p.a) - p.g_load) / (3.0 * p.b))
        omega = 1.0 / math.sqrt(p.l * p.varactor.capacitance(eta))
        return v, omega


def vdp_core_admittance(params: VdpParams, v_core: float, omega: float,
                        eta: float) -> complex:
    """Loaded-core admittance (a + 3/4 b V^2 + g_load) + j(w C(eta) - 1/(w L))."""
    if v_core <= 0 or omega <= 0:
        raise ValueError("v_core and omega must be positive")
    va = params.varactor
    if eta < 0:
        raise ValueError(
            f"eta = {eta:.6g} V < 0: forward-bias region unmodeled")
    return _k.vdp_core_admittance(
        params.a, params.b, params.l, va.c_jo, va.m, va.v_bi,
        params.g_load, v_core, omega, eta)


def node_admittance(params: VdpParams, v_node: float, omega: float,
                    eta: float) -> complex:
    """Admittance seen from the array node.

    Identical to :func:`vdp_core_admittance` when c_out is absent.  With
    c_out the load conductance stays at the node and the unloaded core
    sits behind the series capacitor; an inner fixed point finds the
    core amplitude for the requested node amplitude.
    """
    if v_node <= 0 or omega <= 0:
        raise ValueError("v_node and omega must be positive")
    if eta < 0:
        raise ValueError(
            f"eta = {eta:.6g} V < 0: forward-bias region unmodeled")
    pk = params.packed
    y, status = _k.vdp_node_admittance(*pk, v_node, omega, eta)
    if status != _k.STATUS_OK:
        raise InnerSolveError(float("nan"), _k.CORE_AMPLITUDE_MAX_ITER)
    return y


def injection_phasor_derivatives(osc: OscillatorModel, v: float, omega: float,
                                 eta: float) -> tuple[complex, complex]:
    """(I_G1, I_Gm1) of the oracle at the given point."""
    return osc.injection_derivatives(v, omega, eta)


def chain_rule(i_gr: complex, i_gi: complex) -> tuple[complex, complex]:
    """Rotating-phasor sensitivities from the rectangular ones:
    I_G1 = (I_Gr - j I_Gi)/2, I_Gm1 = (I_Gr + j I_Gi)/2."""
    return 0.5 * (i_gr - 1j * i_gi), 0.5 * (i_gr + 1j * i_gi)


def inverse_chain_rule(i_g1: complex, i_gm1: complex) -> tuple[complex, complex]:
    """Rectangular sensitivities back from the rotating pair:
    I_Gr = I_G1 + I_Gm1, I_Gi = j (I_G1 - I_Gm1)."""
    return i_g1 + i_gm1, 1j * (i_g1 - i_gm1)
