"""Pure-Python kernels for the hot evaluation paths.

These functions are the reference implementation of the per-iteration
work inside the Newton loops: the coupling two-port, the Van der Pol
node admittance (including the series output-capacitor inner solve) and
the full array residual.  ``oscarray._kernels`` is a compiled twin with
the same signatures; ``oscarray.kernels`` selects between them at import
time.

Everything here works on plain scalars and flat arrays so the two
backends stay line-for-line comparable.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

# Model kinds understood by the residual kernel.
KIND_PW = 0
KIND_NONPW = 1
KIND_VDP = 2

# Status codes: 0 = ok, 1000+i = tuning range at oscillator i,
# 2000+i = inner core-amplitude solve failed at oscillator i.
STATUS_OK = 0
STATUS_RANGE = 1000
STATUS_INNER = 2000

CORE_AMPLITUDE_TOL = 1e-12
CORE_AMPLITUDE_MAX_ITER = 100


def varactor_capacitance(c_jo, m, v_bi, eta):
    """Junction capacitance c_jo / (1 + eta/v_bi)**m for eta >= 0."""
    return c_jo / (1.0 + eta / v_bi) ** m


def coupling_two_port(z_o, psi_o, omega_ref, r_s, r_p, omega):
    """Y-parameters (y11, y12) of the resistively loaded line network.

    Pi topology: shunt r_p at each port, series branch = an ideal
    lossless line (impedance z_o, electrical length psi_o*omega/omega_ref)
    with r_s/2 at each end, keeping the network symmetric at every
    frequency.  The branch ABCD entries are formed before inversion, so
    odd multiples of pi in the line length stay regular.
    """
    psi = psi_o * omega / omega_ref
    c = math.cos(psi)
    s = math.sin(psi)
    half = 0.5 * r_s
    # branch [r_s/2][line][r_s/2]: A = D by symmetry, det = 1.
    a = complex(c, half * s / z_o)
    b = complex(r_s * c, (z_o + half * half / z_o) * s)
    y12 = -1.0 / b
    y11 = 1.0 / r_p + a / b
    return y11, y12


def vdp_core_conductance(a, b, g_load, v_core):
    """First-harmonic conductance of the loaded cubic core."""
    return a + 0.75 * b * v_core * v_core + g_load


def vdp_susceptance(l, c_jo, m, v_bi, omega, eta):
    """Resonator susceptance omega*C(eta) - 1/(omega*L)."""
    cap = varactor_capacitance(c_jo, m, v_bi, eta)
    return omega * cap - 1.0 / (omega * l)


def vdp_core_admittance(a, b, l, c_jo, m, v_bi, g_load, v_core, omega, eta):
    """Loaded core admittance (a + 3/4 b V^2 + g_load) + j B(omega, eta)."""
    return complex(
        vdp_core_conductance(a, b, g_load, v_core),
        vdp_susceptance(l, c_jo, m, v_bi, omega, eta),
    )


def vdp_core_amplitude(a, b, l, c_jo, m, v_bi, c_out, g_load,
                       v_node, omega, eta):
    """Core amplitude behind the series capacitor for a given node amplitude.

    Fixed point of V_core = V_node * |j w C / (Y_u(V_core) + j w C)| with
    Y_u the unloaded core admittance.  Returns (v_core, status, last_step);
    steps are halved whenever they stop contracting.
    """
    x = omega * c_out
    b_res = vdp_susceptance(l, c_jo, m, v_bi, omega, eta)
    v_core = v_node
    last = math.inf
    step = 0.0
    for _ in range(CORE_AMPLITUDE_MAX_ITER):
        g_u = a + 0.75 * b * v_core * v_core
        den = math.hypot(g_u, b_res + x)
        target = v_node * x / den
        step = target - v_core
        astep = abs(step)
        if astep <= CORE_AMPLITUDE_TOL:
            return target, STATUS_OK, astep
        if astep >= last:
            step *= 0.5
            astep = abs(step)
        v_core += step
        last = astep
    return v_core, STATUS_INNER, abs(step)


def vdp_node_admittance(a, b, l, c_jo, m, v_bi, c_out, g_load,
                        v_node, omega, eta):
    """One-port admittance seen from the array node.

    Without c_out this is the loaded core.  With c_out the load stays at
    the node and the unloaded core sits behind the series capacitor:
    Y = g_load + series(Y_u, j w c_out).  Returns (admittance, status).
    """
    if c_out <= 0.0:
        return (
            vdp_core_admittance(a, b, l, c_jo, m, v_bi, g_load,
                                v_node, omega, eta),
            STATUS_OK,
        )
    v_core, status, _ = vdp_core_amplitude(
        a, b, l, c_jo, m, v_bi, c_out, g_load, v_node, omega, eta)
    if status != STATUS_OK:
        return 0j, status
    y_u = complex(
        a + 0.75 * b * v_core * v_core,
        vdp_susceptance(l, c_jo, m, v_bi, omega, eta),
    )
    jx = complex(0.0, omega * c_out)
    return g_load + y_u * jx / (y_u + jx), STATUS_OK


def locate_interval(t_eta, lo, hi, eta):
    """Left-closed interval index in t_eta[lo:hi]; -1 when out of range.

    Returns the absolute index k with t_eta[k] <= eta < t_eta[k+1]; the
    upper endpoint maps to the last interval.
    """
    if eta < t_eta[lo] or eta > t_eta[hi - 1]:
        return -1
    k = lo + int(np.searchsorted(t_eta[lo:hi], eta, side="right")) - 1
    if k == hi - 1:
        k = hi - 2
    return k


def eval_residual(kinds, offs,
                  t_eta, t_vo, t_wo, t_yv, t_yw, t_ye, t_g1, t_gm1,
                  vdp,
                  z_o, psi_o, omega_ref, r_s, r_p,
                  v, phi, eta, omega_s,
                  i_s, theta_s, q,
                  anchor_nearest,
                  out_res, out_k):
    """First-harmonic KCL residual of the coupled array.

    For each oscillator i the complex residual is

        Ylin_i * V_i + sum_n C_{i,n}(w_s) V_n e^{j(phi_n - phi_i)}
                     + [i == q] I_s (I_Gr cos(th_s - phi_i)
                                     + I_Gi sin(th_s - phi_i))

    written into out_res as interleaved (Re, Im) pairs.  out_k receives
    the active sample index per oscillator (-1 for direct oracles).
    Returns a status code instead of raising so the compiled twin can
    share the contract.
    """
    n = len(kinds)
    y11, y12 = coupling_two_port(z_o, psi_o, omega_ref, r_s, r_p, omega_s)
    ys = 2.0 * y11

    ylin = [0j] * n
    igr = [0j] * n
    igi = [0j] * n

    for i in range(n):
        kind = kinds[i]
        if kind == KIND_VDP:
            y, status = vdp_node_admittance(
                vdp[i, 0], vdp[i, 1], vdp[i, 2], vdp[i, 3], vdp[i, 4],
                vdp[i, 5], vdp[i, 6], vdp[i, 7], v[i], omega_s, eta[i])
            if status != STATUS_OK:
                return STATUS_INNER + i
            ylin[i] = y
            igr[i] = 1.0 + 0j
            igi[i] = 1j
            out_k[i] = -1
        else:
            lo = int(offs[i])
            hi = int(offs[i + 1])
            if kind == KIND_NONPW:
                k = lo
            else:
                k = locate_interval(t_eta, lo, hi, eta[i])
                if k < 0:
                    return STATUS_RANGE + i
                if anchor_nearest and k + 1 < hi:
                    if eta[i] - t_eta[k] > t_eta[k + 1] - eta[i]:
                        k += 1
            ylin[i] = (t_yv[k] * (v[i] - t_vo[k])
                       + t_yw[k] * (omega_s - t_wo[k])
                       + t_ye[k] * (eta[i] - t_eta[k]))
            g1 = t_g1[k]
            gm1 = t_gm1[k]
            igr[i] = g1 + gm1
            igi[i] = 1j * (g1 - gm1)
            out_k[i] = k - lo

    for i in range(n):
        r = ylin[i] * complex(v[i])
        for nn in (i - 1, i, i + 1):
            if nn < 0 or nn >= n:
                continue
            c = ys if nn == i else y12
            r += c * complex(v[nn]) * cmath.exp(1j * (phi[nn] - phi[i]))
        if i == q:
            d = theta_s - phi[i]
            r += i_s * (igr[i] * math.cos(d) + igi[i] * math.sin(d))
        out_res[2 * i] = r.real
        out_res[2 * i + 1] = r.imag
    return STATUS_OK
