"""Shared fixtures: the Van der Pol testbed used throughout the suite.

Device values follow the 5.2 GHz array study: a = -23 mA/V, b = 10
mA/V^3, L = 1.53 nH, C_jo = 0.72 pF, M = 0.5, R_L = 50 ohm, with the
varactor built-in potential calibrated so the plain oscillator
free-runs at 5.2 GHz for eta = 2.5 V.  The coupling network keeps the
Pi topology but with weak resistances so the identical-array tuning
excursions stay well inside the sampling range (see notes on the
element values in README).
"""

import math

import pytest

import oscarray as oa

A = -0.023
B = 0.01
L = 1.53e-9
C_JO = 0.72e-12
M = 0.5
R_LOAD = 50.0
G_LOAD = 1.0 / R_LOAD
F_REF = 5.2e9
W_REF = 2.0 * math.pi * F_REF
Z_O = 50.0
PSI_O = 2.0 * math.pi

# Acceptance-testbed coupling (weak; keeps eta excursions ~1 mV)
R_S = 1.0e6
R_P = 2.4e5

V_O_CLOSED = math.sqrt(4.0 * (abs(A) - G_LOAD) / (3.0 * B))  # sqrt(0.4)

C_OUT_1 = 10e-12
C_OUT_3 = 9.65e-12


@pytest.fixture(scope="session")
def v_bi():
    return oa.calibrate_v_bi(C_JO, M, L, 2.5, F_REF)


@pytest.fixture(scope="session")
def varactor(v_bi):
    return oa.VaractorModel(C_JO, M, v_bi)


def _osc(varactor, c_out=None):
    return oa.VdpOscillator(oa.VdpParams(
        a=A, b=B, l=L, varactor=varactor, g_load=G_LOAD, c_out=c_out))


@pytest.fixture(scope="session")
def oscillator(varactor):
    return _osc(varactor)


@pytest.fixture(scope="session")
def osc_cout1(varactor):
    return _osc(varactor, C_OUT_1)


@pytest.fixture(scope="session")
def osc_cout3(varactor):
    return _osc(varactor, C_OUT_3)


@pytest.fixture(scope="session")
def coupling():
    return oa.CouplingParams(z_o=Z_O, psi_o=PSI_O, f_ref=F_REF,
                             r_s=R_S, r_p=R_P)


@pytest.fixture(scope="session")
def coupling_fig_values():
    # Two-port element values from the array schematic; used only for
    # network-algebra checks (far too lossy for a live VdP array).
    return oa.CouplingParams(z_o=Z_O, psi_o=PSI_O, f_ref=F_REF,
                             r_s=1250.0, r_p=300.0)


@pytest.fixture(scope="session")
def grid33():
    return oa.SamplingGrid.linspace(2.4, 4.0, 33)


@pytest.fixture(scope="session")
def pw33(oscillator, grid33):
    return oa.extract_piecewise(oscillator, grid33)


@pytest.fixture(scope="session")
def spec_identical(pw33, coupling):
    return oa.ArraySpec(models=(pw33,) * 3, coupling=coupling, q=1,
                        eta_q=2.5, anchor="nearest")


@pytest.fixture(scope="session")
def spec_exact(oscillator, coupling):
    return oa.ArraySpec(models=(oscillator,) * 3, coupling=coupling, q=1,
                        eta_q=2.5)


@pytest.fixture(scope="session")
def spec_asym_exact(osc_cout1, oscillator, osc_cout3, coupling):
    return oa.ArraySpec(models=(osc_cout1, oscillator, osc_cout3),
                        coupling=coupling, q=1, eta_q=2.5)


@pytest.fixture(scope="session")
def pw33_asym(osc_cout1, oscillator, osc_cout3, grid33, pw33):
    return (oa.extract_piecewise(osc_cout1, grid33), pw33,
            oa.extract_piecewise(osc_cout3, grid33))


@pytest.fixture(scope="session")
def spec_asym_pw(pw33_asym, coupling):
    return oa.ArraySpec(models=pw33_asym, coupling=coupling, q=1,
                        eta_q=2.5, anchor="nearest")
