"""Exact-system reference solves and curve comparison metrics."""

import numpy as np
import pytest

import oscarray as oa


class TestExactSolve:
    def test_symmetric_fixed_point(self, spec_exact):
        sol = oa.exact_sync_solve(spec_exact, None, 0.0)
        assert sol.eta[0] == pytest.approx(2.5, abs=1e-10)
        assert sol.eta[2] == pytest.approx(2.5, abs=1e-10)
        assert np.all(sol.k_vec == -1)

    def test_requires_oracle_models(self, spec_identical):
        with pytest.raises(TypeError, match="oracle"):
            oa.exact_sync_solve(spec_identical, None, 0.0)

    def test_gauge_invariant_residual(self, spec_exact):
        sol = oa.exact_sync_solve(spec_exact, None, 0.8)
        for alpha in (0.37, -2.2):
            r = oa.assemble_residual(spec_exact, oa.NO_INJECTION, sol.v,
                                     sol.phi + alpha, sol.eta, sol.omega_s)
            assert np.max(np.abs(r)) < 1e-9


class TestConsistencyInTheLimit:
    def test_pw_matches_exact_on_contrived_grid(self, oscillator, coupling):
        # ultra-weak coupling plus per-oscillator grids centered exactly
        # on the exact solution: the linearization error all but vanishes
        cp = oa.CouplingParams(z_o=coupling.z_o, psi_o=coupling.psi_o,
                               f_ref=coupling.f_ref, r_s=1e7, r_p=1e7)
        spec_ex = oa.ArraySpec(models=(oscillator,) * 3, coupling=cp,
                               q=1, eta_q=2.5)
        sol = oa.exact_sync_solve(spec_ex, None, 0.4)
        eps = 2e-4
        models = []
        for i in range(3):
            eta_i = float(sol.eta[i])
            grid = oa.SamplingGrid((eta_i - eps, eta_i, eta_i + eps))
            models.append(oa.extract_piecewise(oscillator, grid))
        spec_pw = oa.ArraySpec(models=tuple(models), coupling=cp, q=1,
                               eta_q=2.5, anchor="nearest")
        pw = oa.solve_constant_phase(spec_pw, None, 0.4, tol=1e-11)
        assert np.max(np.abs(pw.eta - sol.eta)) < 1e-8
        assert np.max(np.abs(pw.v - sol.v)) < 1e-8
        assert abs(pw.omega_s - sol.omega_s) / sol.omega_s < 1e-10


class TestCompareCurves:
    def test_identity_is_zero(self, spec_identical):
        sw = oa.sweep_phase(spec_identical, None, np.linspace(-0.4, 0.4, 9))
        c = oa.compare_curves(sw, sw)
        assert c.max_abs_eta_error == 0.0
        assert c.rms_eta_error == 0.0
        assert c.max_rel_freq_error == 0.0
        assert c.points == 9

    def test_refinement_monotonicity(self, oscillator, spec_exact, coupling):
        dphis = np.linspace(-0.8, 0.8, 9)
        sw_ex = oa.exact_sweep(spec_exact, None, dphis)
        errs = {}
        for p in (9, 33):
            grid = oa.SamplingGrid.linspace(2.4, 4.0, p)
            pwm = oa.extract_piecewise(oscillator, grid)
            spec = oa.ArraySpec(models=(pwm,) * 3, coupling=coupling, q=1,
                                eta_q=2.5, anchor="nearest")
            sw = oa.sweep_phase(spec, None, dphis)
            errs[p] = oa.compare_curves(sw, sw_ex).max_abs_eta_error
        assert errs[9] >= errs[33]

    def test_asymmetric_curves_lose_mirror_symmetry(self, spec_asym_pw,
                                                     spec_asym_exact):
        dphis = np.linspace(-0.8, 0.8, 9)
        sw = oa.sweep_phase(spec_asym_pw, None, dphis)
        ex = oa.exact_sweep(spec_asym_exact, None, dphis)
        # output capacitors shift both outer curves up and apart
        assert np.all(sw.eta(0) > 3.5) and np.all(sw.eta(2) > 3.5)
        assert abs(sw.eta(0)[4] - sw.eta(2)[4]) > 0.01
        # mirror symmetry of the identical case is broken
        assert np.max(np.abs(sw.eta(0)[::-1] - sw.eta(2))) > 0.01
        # yet the piecewise curve still tracks the exact one
        assert oa.compare_curves(sw, ex).max_abs_eta_error < 1e-4

    def test_disjoint_domains_rejected(self, spec_identical):
        a = oa.sweep_phase(spec_identical, None, np.linspace(-0.4, -0.2, 3))
        b = oa.sweep_phase(spec_identical, None, np.linspace(0.2, 0.4, 3))
        with pytest.raises(ValueError, match="overlap"):
            oa.compare_curves(a, b)

    def test_needs_two_points(self, spec_identical):
        sw = oa.sweep_phase(spec_identical, None, [0.0])
        with pytest.raises(ValueError, match="two converged"):
            oa.compare_curves(sw, sw)
