#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the raw array-residual evaluation (the innermost hot call of
every Newton iteration) and a representative end-to-end phase sweep
with each backend, then prints the speedups.

Run:  python benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

import oscarray as oa
from oscarray import _kernels_py
from oscarray import kernels as facade
from oscarray.solver import _Packed

try:
    from oscarray import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def build_testbed():
    v_bi = oa.calibrate_v_bi(0.72e-12, 0.5, 1.53e-9, 2.5, 5.2e9)
    var = oa.VaractorModel(0.72e-12, 0.5, v_bi)
    osc = oa.VdpOscillator(oa.VdpParams(
        a=-0.023, b=0.01, l=1.53e-9, varactor=var, g_load=0.02))
    cp = oa.CouplingParams(z_o=50.0, psi_o=2 * math.pi, f_ref=5.2e9,
                           r_s=1e6, r_p=2.4e5)
    pwm = oa.extract_piecewise(osc, oa.SamplingGrid.linspace(2.4, 4.0, 33))
    spec = oa.ArraySpec(models=(pwm,) * 3, coupling=cp, q=1, eta_q=2.5,
                        anchor="nearest")
    return spec


def bench_residual(impl, spec, n_calls=20000):
    packed = _Packed(spec)
    n = spec.n
    v = np.full(n, 0.63)
    phi = spec.phases(0.4)
    eta = np.full(n, 2.5)
    out = np.empty(2 * n)
    k = np.empty(n, dtype=np.int64)
    args = (packed.kinds, packed.offs, packed.t_eta, packed.t_vo,
            packed.t_wo, packed.t_yv, packed.t_yw, packed.t_ye,
            packed.t_g1, packed.t_gm1, packed.vdp, *packed.cp,
            v, phi, eta, 2 * math.pi * 5.2e9, 0.0, 0.0, 1, 1, out, k)
    impl.eval_residual(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(n_calls):
        impl.eval_residual(*args)
    return (time.perf_counter() - t0) / n_calls


def bench_sweep(impl, spec, repeats=5):
    saved = facade.eval_residual
    facade.eval_residual = impl.eval_residual
    try:
        dphis = np.arange(-1.4, 1.4001, 0.05)
        oa.sweep_phase(spec, None, dphis)  # warm up
        t0 = time.perf_counter()
        for _ in range(repeats):
            oa.sweep_phase(spec, None, dphis)
        return (time.perf_counter() - t0) / repeats
    finally:
        facade.eval_residual = saved


def main():
    spec = build_testbed()
    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))
    else:
        print("compiled kernels not built; benchmarking the fallback only")

    print(f"{'backend':<8} {'residual eval':>16} {'57-point sweep':>16}")
    results = {}
    for name, impl in backends:
        t_res = bench_residual(impl, spec)
        t_sweep = bench_sweep(impl, spec)
        results[name] = (t_res, t_sweep)
        print(f"{name:<8} {t_res * 1e6:>13.2f} us {t_sweep * 1e3:>13.2f} ms")

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"{'speedup':<8} {py[0] / cy[0]:>14.1f}x {py[1] / cy[1]:>14.1f}x")


if __name__ == "__main__":
    main()
