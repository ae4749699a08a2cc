# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``oscarray._kernels_py``.

Same contracts, same status codes, same iteration logic; see the pure
module for documentation.  Differences between the two backends beyond
last-bit rounding are bugs (cross-checked by tests/test_kernels.py).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, fabs, hypot, pow, sin

KIND_PW = 0
KIND_NONPW = 1
KIND_VDP = 2

STATUS_OK = 0
STATUS_RANGE = 1000
STATUS_INNER = 2000

CORE_AMPLITUDE_TOL = 1e-12
CORE_AMPLITUDE_MAX_ITER = 100

cdef double _CORE_TOL = 1e-12
cdef int _CORE_MAX_ITER = 100


def coupling_two_port(double z_o, double psi_o, double omega_ref,
                      double r_s, double r_p, double omega):
    """(y11, y12) of the Pi-loaded line two-port at omega."""
    cdef double psi = psi_o * omega / omega_ref
    cdef double c = cos(psi)
    cdef double s = sin(psi)
    cdef double half = 0.5 * r_s
    cdef double complex a = c + 1j * (half * s / z_o)
    cdef double complex b = r_s * c + 1j * ((z_o + half * half / z_o) * s)
    cdef double complex y12 = -1.0 / b
    cdef double complex y11 = 1.0 / r_p + a / b
    return y11, y12


cdef inline double _cap(double c_jo, double m, double v_bi, double eta) nogil:
    return c_jo / pow(1.0 + eta / v_bi, m)


cdef inline int _core_amplitude(double a, double b, double l, double c_jo,
                                double m, double v_bi, double c_out,
                                double v_node, double omega, double eta,
                                double *out) nogil:
    cdef double x = omega * c_out
    cdef double b_res = omega * _cap(c_jo, m, v_bi, eta) - 1.0 / (omega * l)
    cdef double v_core = v_node
    cdef double last = INFINITY
    cdef double step, astep, g_u, den, target
    cdef int it
    for it in range(_CORE_MAX_ITER):
        g_u = a + 0.75 * b * v_core * v_core
        den = hypot(g_u, b_res + x)
        target = v_node * x / den
        step = target - v_core
        astep = fabs(step)
        if astep <= _CORE_TOL:
            out[0] = target
            return 0
        if astep >= last:
            step *= 0.5
            astep = fabs(step)
        v_core += step
        last = astep
    out[0] = v_core
    return 1


cdef inline int _vdp_node(double a, double b, double l, double c_jo, double m,
                          double v_bi, double c_out, double g_load,
                          double v, double omega, double eta,
                          double complex *out) nogil:
    cdef double b_res = omega * _cap(c_jo, m, v_bi, eta) - 1.0 / (omega * l)
    cdef double v_core
    cdef double complex y_u, jx
    if c_out <= 0.0:
        out[0] = (a + 0.75 * b * v * v + g_load) + 1j * b_res
        return 0
    if _core_amplitude(a, b, l, c_jo, m, v_bi, c_out, v, omega, eta,
                       &v_core) != 0:
        return 1
    y_u = (a + 0.75 * b * v_core * v_core) + 1j * b_res
    jx = 1j * (omega * c_out)
    out[0] = g_load + y_u * jx / (y_u + jx)
    return 0


cdef inline Py_ssize_t _locate(const double[:] t_eta, Py_ssize_t lo,
                               Py_ssize_t hi, double eta) nogil:
    # bisect_right over t_eta[lo:hi], left-closed intervals, upper
    # endpoint clamped into the last interval.
    cdef Py_ssize_t a, b, mid, k
    if eta < t_eta[lo] or eta > t_eta[hi - 1]:
        return -1
    a = lo
    b = hi
    while a < b:
        mid = (a + b) // 2
        if t_eta[mid] <= eta:
            a = mid + 1
        else:
            b = mid
    k = a - 1
    if k == hi - 1:
        k = hi - 2
    return k


def eval_residual(const cnp.int32_t[:] kinds, const cnp.int64_t[:] offs,
                  const double[:] t_eta, const double[:] t_vo,
                  const double[:] t_wo,
                  const double complex[:] t_yv, const double complex[:] t_yw,
                  const double complex[:] t_ye, const double complex[:] t_g1,
                  const double complex[:] t_gm1,
                  const double[:, :] vdp,
                  double z_o, double psi_o, double omega_ref,
                  double r_s, double r_p,
                  const double[:] v, const double[:] phi, const double[:] eta,
                  double omega_s, double i_s, double theta_s, long q,
                  long anchor_nearest,
                  double[:] out_res, cnp.int64_t[:] out_k):
    """Array KCL residual; see the pure-Python twin for the contract."""
    cdef Py_ssize_t n = kinds.shape[0]
    cdef double psi = psi_o * omega_s / omega_ref
    cdef double cps = cos(psi)
    cdef double sps = sin(psi)
    cdef double half = 0.5 * r_s
    cdef double complex abr = cps + 1j * (half * sps / z_o)
    cdef double complex bline = r_s * cps + 1j * ((z_o + half * half / z_o) * sps)
    cdef double complex y12 = -1.0 / bline
    cdef double complex ys = 2.0 * (1.0 / r_p + abr / bline)

    scratch = np.empty(3 * n, dtype=complex)
    cdef double complex[:] buf = scratch
    cdef Py_ssize_t i, nn, lo, hi, k
    cdef int kind
    cdef double complex ylin, g1, gm1, r, c
    cdef double d

    for i in range(n):
        kind = kinds[i]
        if kind == KIND_VDP:
            if _vdp_node(vdp[i, 0], vdp[i, 1], vdp[i, 2], vdp[i, 3],
                         vdp[i, 4], vdp[i, 5], vdp[i, 6], vdp[i, 7],
                         v[i], omega_s, eta[i], &ylin) != 0:
                return STATUS_INNER + i
            buf[3 * i] = ylin
            buf[3 * i + 1] = 1.0 + 0j
            buf[3 * i + 2] = 1j
            out_k[i] = -1
        else:
            lo = offs[i]
            hi = offs[i + 1]
            if kind == KIND_NONPW:
                k = lo
            else:
                k = _locate(t_eta, lo, hi, eta[i])
                if k < 0:
                    return STATUS_RANGE + i
                if anchor_nearest and k + 1 < hi:
                    if eta[i] - t_eta[k] > t_eta[k + 1] - eta[i]:
                        k += 1
            ylin = (t_yv[k] * (v[i] - t_vo[k])
                    + t_yw[k] * (omega_s - t_wo[k])
                    + t_ye[k] * (eta[i] - t_eta[k]))
            g1 = t_g1[k]
            gm1 = t_gm1[k]
            buf[3 * i] = ylin
            buf[3 * i + 1] = g1 + gm1
            buf[3 * i + 2] = 1j * (g1 - gm1)
            out_k[i] = k - lo

    for i in range(n):
        r = buf[3 * i] * v[i]
        for nn in range(i - 1, i + 2):
            if nn < 0 or nn >= n:
                continue
            c = ys if nn == i else y12
            d = phi[nn] - phi[i]
            r = r + c * v[nn] * (cos(d) + 1j * sin(d))
        if i == q:
            d = theta_s - phi[i]
            r = r + i_s * (buf[3 * i + 1] * cos(d) + buf[3 * i + 2] * sin(d))
        out_res[2 * i] = r.real
        out_res[2 * i + 1] = r.imag
    return STATUS_OK
