"""Independent oracles for the test suite.

Everything here re-derives expected values through a different route
than the code under test: numerical Fourier integration for the
describing function, raw ABCD cascades for the two-port, a core-side
balance for the series-capacitor free-running point, scipy root finding
for the in-phase amplitudes, and finite-difference probing of the
residual field for the stability matrix.
"""

import math

import numpy as np
import scipy.optimize

from oscarray.solver import assemble_residual, model_terms


def fourier_first_harmonic_conductance(a, b, v, n=4096):
    """First-harmonic conductance of i(v) = a v + b v^3 driven by
    v(t) = V cos(wt), via trapezoidal Fourier integration."""
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    vv = v * np.cos(theta)
    i = a * vv + b * vv**3
    i1 = (2.0 / n) * np.sum(i * np.cos(theta))
    return i1 / v


def abcd_two_port(cp, omega):
    """(y11, y12, y21, y22) via explicit ABCD matrix multiplication:
    [shunt 1/r_p] [series r_s/2] [line] [series r_s/2] [shunt 1/r_p]."""
    psi = cp.psi_o * omega / cp.omega_ref
    shunt = np.array([[1.0, 0.0], [1.0 / cp.r_p, 1.0]], dtype=complex)
    half = np.array([[1.0, 0.5 * cp.r_s], [0.0, 1.0]], dtype=complex)
    line = np.array([[math.cos(psi), 1j * cp.z_o * math.sin(psi)],
                     [1j * math.sin(psi) / cp.z_o, math.cos(psi)]])
    m = shunt @ half @ line @ half @ shunt
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    det = a * d - b * c
    return d / b, -det / b, -1.0 / b, a / b


def cout_free_running(params, eta):
    """Free-running (v_node, omega) of a VdP oscillator with a series
    output capacitor, from the core-side balance Y_u + Yeff = 0 with
    Yeff = series(g_load, j w c_out): a closed-form amplitude plus a 1-D
    bracket search in omega."""
    a, b, l = params.a, params.b, params.l
    va = params.varactor
    g = params.g_load
    c_out = params.c_out
    cap = va.capacitance(eta)

    def y_eff(w):
        jx = 1j * w * c_out
        return g * jx / (g + jx)

    def imbalance(w):
        return (w * cap - 1.0 / (w * l)) + y_eff(w).imag

    w_mid = 1.0 / math.sqrt(l * cap)
    w = scipy.optimize.brentq(imbalance, 0.5 * w_mid, 1.5 * w_mid,
                              xtol=1e-4, rtol=8.9e-16)
    re_eff = y_eff(w).real
    v_core = math.sqrt((abs(a) - re_eff) / (0.75 * b))
    y_u = -y_eff(w)
    jx = 1j * w * c_out
    v_node = v_core * abs((y_u + jx) / jx)
    return v_node, w


def inphase_amplitudes(a, b, g, y_s, y_nb, v0):
    """Edge/middle amplitudes of the identical three-element array at
    delta_phi = 0, eta on resonance: two coupled real cubics solved by
    scipy.  Valid when the coupling admittances are real."""
    def eqs(x):
        ve, v2 = x
        f1 = (a + g + 0.75 * b * ve * ve + y_s) * ve + y_nb * v2
        f2 = (a + g + 0.75 * b * v2 * v2 + y_s) * v2 + 2.0 * y_nb * ve
        return [f1, f2]

    sol = scipy.optimize.fsolve(eqs, [v0, v0], xtol=1e-13, full_output=False)
    return float(sol[0]), float(sol[1])


def fd_stability_matrix(spec, inj, sol, h_v=1e-7, h_phi=1e-7):
    """Finite-difference twin of the stability assembly.

    Probes the steady residual field with central differences in each
    amplitude and phase, then applies the same S-transform: the only
    shared inputs are the model data (y_omega) and the residual code.
    """
    n = spec.n
    w_ref = spec.coupling.omega_ref
    y_w = np.array([model_terms(spec, i, sol.v[i], sol.omega_s,
                                sol.eta[i]).y_omega for i in range(n)])

    def res_complex(v, phi):
        r = assemble_residual(spec, inj, v, phi, sol.eta, sol.omega_s)
        return r[0::2] + 1j * r[1::2]

    a = np.empty((2 * n, 2 * n))
    for col in range(2 * n):
        vp = sol.v.copy()
        vm = sol.v.copy()
        pp = sol.phi.copy()
        pm = sol.phi.copy()
        if col < n:
            h = h_v * max(1.0, abs(sol.v[col]))
            vp[col] += h
            vm[col] -= h
        else:
            h = h_phi
            pp[col - n] += h
            pm[col - n] -= h
        dr = (res_complex(vp, pp) - res_complex(vm, pm)) / (2.0 * h)
        s = -dr / (y_w * sol.v)
        a[:n, col] = -sol.v * s.imag
        a[n:, col] = s.real
    return a / w_ref


def companion_matrix(roots):
    """Companion matrix whose eigenvalues are the given roots."""
    coeffs = np.poly(np.asarray(roots))
    n = len(roots)
    m = np.zeros((n, n))
    m[0, :] = -np.real(coeffs[1:]) / np.real(coeffs[0])
    m[1:, :-1] = np.eye(n - 1)
    return m
