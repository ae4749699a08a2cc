"""Varactor law, describing-function admittance, injection chain rule."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oscarray as oa
from conftest import A, B, C_JO, F_REF, G_LOAD, L, M, V_O_CLOSED
from _oracles import cout_free_running, fourier_first_harmonic_conductance


class TestVaractor:
    def test_zero_bias_identity(self):
        v = oa.VaractorModel(0.72e-12, 0.5, 1.0)
        assert v.capacitance(0.0) == 0.72e-12

    def test_known_ratio(self):
        # (1 + 3/1)^0.5 = 2 exactly
        v = oa.VaractorModel(0.72e-12, 0.5, 1.0)
        assert v.capacitance(3.0) == pytest.approx(0.36e-12, rel=1e-15)

    def test_forward_bias_rejected(self):
        v = oa.VaractorModel(0.72e-12, 0.5, 1.0)
        with pytest.raises(ValueError, match="forward-bias"):
            v.capacitance(-0.1)

    def test_invalid_parameters_rejected(self):
        for bad in ((0.0, 0.5, 1.0), (1e-12, -1.0, 1.0), (1e-12, 0.5, 0.0)):
            with pytest.raises(ValueError):
                oa.VaractorModel(*bad)

    @given(st.floats(min_value=0.0, max_value=20.0),
           st.floats(min_value=0.01, max_value=5.0))
    def test_strictly_decreasing(self, eta, deta):
        v = oa.VaractorModel(0.72e-12, 0.5, 2.0)
        assert v.capacitance(eta + deta) < v.capacitance(eta)

    def test_module_level_op(self, varactor):
        assert oa.varactor_capacitance(varactor, 2.5) == varactor.capacitance(2.5)


class TestCalibration:
    def test_against_bisection_oracle(self, v_bi):
        # independent 1-D bisection on the analytic resonance formula
        import scipy.optimize

        def f_error(vb):
            cap = C_JO / (1.0 + 2.5 / vb) ** M
            return 1.0 / (2 * math.pi * math.sqrt(L * cap)) - F_REF

        vb_oracle = scipy.optimize.bisect(f_error, 0.5, 50.0,
                                          xtol=1e-12, rtol=8.9e-16)
        assert v_bi == pytest.approx(vb_oracle, rel=1e-9)

    def test_calibrated_frequency(self, varactor):
        f = 1.0 / (2 * math.pi * math.sqrt(L * varactor.capacitance(2.5)))
        assert f == pytest.approx(F_REF, rel=1e-12)

    def test_unreachable_target_rejected(self):
        with pytest.raises(ValueError, match="unreachable"):
            oa.calibrate_v_bi(C_JO, M, L, 2.5, 1e9)  # needs C > c_jo


class TestCoreAdmittance:
    def test_zero_at_closed_form_point(self, oscillator, varactor):
        w = 1.0 / math.sqrt(L * varactor.capacitance(2.5))
        y = oa.vdp_core_admittance(oscillator.params, V_O_CLOSED, w, 2.5)
        assert abs(y) < 1e-15

    def test_small_signal_limit(self, oscillator, varactor):
        w = 1.0 / math.sqrt(L * varactor.capacitance(2.5))
        y = oa.vdp_core_admittance(oscillator.params, 1e-9, w, 2.5)
        assert y.real == pytest.approx(A + G_LOAD, rel=1e-12)
        assert abs(y.imag) < 1e-12

    def test_susceptance_increasing_in_omega(self, oscillator):
        ws = np.linspace(0.5, 1.5, 41) * 2 * math.pi * F_REF
        ims = [oa.vdp_core_admittance(oscillator.params, 0.5, w, 2.5).imag
               for w in ws]
        assert np.all(np.diff(ims) > 0)

    def test_describing_function_vs_fourier(self, oscillator):
        # first-harmonic conductance of the cubic equals a + 3/4 b V^2
        for v in (0.1, 0.35, V_O_CLOSED, 1.2, 3.0):
            g_num = fourier_first_harmonic_conductance(A, B, v)
            w = 2 * math.pi * F_REF
            y = oa.vdp_core_admittance(oscillator.params, v, w, 2.5)
            assert y.real - G_LOAD == pytest.approx(g_num, rel=1e-10)

    def test_domain_errors(self, oscillator):
        with pytest.raises(ValueError):
            oa.vdp_core_admittance(oscillator.params, -1.0, 1e10, 2.5)
        with pytest.raises(ValueError):
            oa.vdp_core_admittance(oscillator.params, 0.5, 1e10, -1.0)


class TestVdpParams:
    def test_no_oscillation_rejected(self, varactor):
        with pytest.raises(oa.NoOscillationError):
            oa.VdpParams(a=-0.019, b=B, l=L, varactor=varactor, g_load=G_LOAD)

    def test_invalid_values_rejected(self, varactor):
        with pytest.raises(ValueError):
            oa.VdpParams(a=0.01, b=B, l=L, varactor=varactor, g_load=G_LOAD)
        with pytest.raises(ValueError):
            oa.VdpParams(a=A, b=-B, l=L, varactor=varactor, g_load=G_LOAD)
        with pytest.raises(ValueError):
            oa.VdpParams(a=A, b=B, l=L, varactor=varactor, g_load=G_LOAD,
                         c_out=0.0)


class TestNodeAdmittance:
    def test_identity_without_cout(self, oscillator):
        w = 2 * math.pi * F_REF
        y_core = oa.vdp_core_admittance(oscillator.params, 0.61, w, 2.7)
        y_node = oa.node_admittance(oscillator.params, 0.61, w, 2.7)
        assert y_node == y_core

    def test_huge_cout_is_transparent(self, varactor, oscillator):
        # 1 F at ~5 GHz: the series capacitor is a short
        p = oa.VdpParams(a=A, b=B, l=L, varactor=varactor, g_load=G_LOAD,
                         c_out=1.0)
        w = 2 * math.pi * F_REF
        y_core = oa.vdp_core_admittance(oscillator.params, 0.61, w, 2.7)
        y_node = oa.node_admittance(p, 0.61, w, 2.7)
        assert abs(y_node - y_core) < 1e-6 * abs(y_core)

    def test_cout_shifts_free_running_point(self, oscillator, osc_cout1):
        # derived via the independent core-side balance oracle
        v_ref, w_ref = cout_free_running(osc_cout1.params, 2.5)
        v, w = oa.solve_free_running(osc_cout1, 2.5)
        assert v == pytest.approx(v_ref, rel=1e-9)
        assert w == pytest.approx(w_ref, rel=1e-9)
        v0, w0 = oa.solve_free_running(oscillator, 2.5)
        assert (w0 - w) / (2 * math.pi) > 100e6  # well over 100 MHz down

    def test_core_amplitude_close_to_node(self, osc_cout1):
        # near free running the series capacitor carries little current
        v, w = oa.solve_free_running(osc_cout1, 2.5)
        vc = osc_cout1.core_amplitude(v, w, 2.5)
        assert vc == pytest.approx(v, rel=5e-3)


class TestCoreAmplitudeFixedPoint:
    def test_satisfies_divider_equation(self, varactor):
        from oscarray import _kernels_py as k

        # strong amplitude dependence stresses the damped iteration
        cases = [
            (-0.023, 0.01, 10e-12, 0.63, 1.0),
            (-0.023, 5.0, 2e-12, 0.4, 0.7),
        ]
        w = 2 * math.pi * F_REF
        for a, b, c_out, v_node, scale in cases:
            args = (a, b, L, C_JO, M, varactor.v_bi, c_out, G_LOAD)
            v_core, status, last = k.vdp_core_amplitude(
                *args, v_node, w * scale, 2.5)
            assert status == k.STATUS_OK
            b_res = k.vdp_susceptance(L, C_JO, M, varactor.v_bi,
                                      w * scale, 2.5)
            x = w * scale * c_out
            g_u = a + 0.75 * b * v_core * v_core
            target = v_node * x / math.hypot(g_u, b_res + x)
            assert abs(v_core - target) <= 2e-12

    def test_iteration_budget_exhaustion_reported(self, varactor):
        # a grotesquely stiff cubic keeps the divider map cycling; the
        # budget runs out and the node admittance reports it
        from oscarray import _kernels_py as k

        w = 2 * math.pi * F_REF * 1.3
        args = (-0.05, 50.0, L, C_JO, M, varactor.v_bi, 1e-12, G_LOAD)
        v_core, status, last = k.vdp_core_amplitude(*args, 0.2, w, 2.5)
        assert status == k.STATUS_INNER
        assert last > 0
        stiff = oa.VdpParams(a=-0.05, b=50.0, l=L,
                             varactor=varactor, g_load=G_LOAD, c_out=1e-12)
        with pytest.raises(oa.InnerSolveError):
            oa.node_admittance(stiff, 0.2, w, 2.5)


class TestInjectionDerivatives:
    def test_direct_node_injection(self, oscillator):
        g1, gm1 = oa.injection_phasor_derivatives(oscillator, 0.6, 3e10, 2.5)
        assert g1 == 1.0 + 0j
        assert gm1 == 0j

    @given(st.tuples(*[st.floats(-5, 5) for _ in range(4)]))
    def test_chain_rule_identities(self, parts):
        i_gr = complex(parts[0], parts[1])
        i_gi = complex(parts[2], parts[3])
        g1, gm1 = oa.chain_rule(i_gr, i_gi)
        assert g1 == 0.5 * (i_gr - 1j * i_gi)
        assert gm1 == 0.5 * (i_gr + 1j * i_gi)
        # inverse chain rule recovers the stored pair exactly
        back_r, back_i = oa.inverse_chain_rule(g1, gm1)
        assert abs(back_r - i_gr) < 1e-12
        assert abs(back_i - i_gi) < 1e-12

    def test_stored_pair_example(self):
        g1, gm1 = oa.chain_rule(0.8 + 0j, 1.1j)
        assert g1 + gm1 == pytest.approx(0.8 + 0j)
        assert 1j * (g1 - gm1) == pytest.approx(1.1j)
