"""Coupled-oscillator array analysis with piecewise-linear admittance models.

Workflow: extract each VCO's free-running characteristic over a tuning
grid (`extraction`), solve the coupled first-harmonic system for
constant-phase-shift synchronized solutions, free-running or injected
(`solver`), classify their stability from the perturbation-matrix
spectrum (`stability`), and validate the linearized models against the
exact analytic system (`validation`).
"""

from .coupling import CouplingParams, coupling_matrix, coupling_two_port
from .errors import (ConfigError, ConvergenceError, InconsistencyError,
                     InnerSolveError, NoOscillationError, OscArrayError,
                     SingularJacobianError, SingularModelError,
                     TuningRangeError)
from .extraction import (AdmittanceSample, FdSteps, NonPwModel,
                         PiecewiseModel, SamplingGrid, extract_non_pw,
                         extract_piecewise, locate_interval, pw_admittance,
                         read_sample_table, sample_derivatives,
                         solve_free_running, write_sample_table)
from .kernels import backend_name
from .oscillator import (OscillatorModel, VaractorModel, VdpOscillator,
                         VdpParams, calibrate_v_bi, chain_rule,
                         injection_phasor_derivatives, inverse_chain_rule,
                         node_admittance, varactor_capacitance,
                         vdp_core_admittance)
from .solver import (ArraySpec, InjectionSource, NO_INJECTION, SweepPoint,
                     SweepResult, SynchronizedSolution, assemble_residual,
                     closure_defect, locking_bandwidth, model_terms,
                     solve_constant_phase, sweep_injection, sweep_phase,
                     write_sweep_csv)
from .stability import (StabilityMatrix, StabilityResult, StableRangeResult,
                        assemble_stability_matrix, classify_stability,
                        eigenvalues, solution_stability, stable_range,
                        write_stability_csv)
from .validation import (CurveComparison, compare_curves, exact_sweep,
                         exact_sync_solve)

__version__ = "0.1.0"
