"""Exception types shared across the package."""

from __future__ import annotations


class OscArrayError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(OscArrayError):
    """Invalid run configuration (bad file, bad value, missing reference)."""


class NoOscillationError(OscArrayError):
    """The small-signal net conductance is non-negative: no limit cycle."""


class TuningRangeError(OscArrayError, ValueError):
    """A tuning voltage falls outside a model's sampling range.

    Solvers treat this as a recoverable step-rejection signal.
    """

    def __init__(self, eta: float, lo: float, hi: float, oscillator: int | None = None):
        self.eta = eta
        self.lo = lo
        self.hi = hi
        self.oscillator = oscillator
        where = "" if oscillator is None else f" (oscillator {oscillator})"
        super().__init__(
            f"tuning voltage {eta:.6g} V outside sampling range "
            f"[{lo:.6g}, {hi:.6g}] V{where}"
        )


class InnerSolveError(OscArrayError):
    """The series-capacitor core-amplitude iteration failed to converge."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"core-amplitude fixed point did not reach tolerance after "
            f"{iterations} iterations (last step {residual:.3e} V)"
        )


class ConvergenceError(OscArrayError):
    """A Newton solve ran out of iterations or could not reduce the residual.

    The best iterate reached is attached for diagnostics.
    """

    def __init__(self, message: str, state=None, residual_norm: float | None = None):
        self.state = state
        self.residual_norm = residual_norm
        if residual_norm is not None:
            message = f"{message} (residual norm {residual_norm:.3e})"
        super().__init__(message)


class SingularJacobianError(OscArrayError):
    """The finite-difference Jacobian is numerically singular."""


class SingularModelError(OscArrayError):
    """An oscillator model has no usable frequency sensitivity."""


class InconsistencyError(OscArrayError):
    """An internal cross-check failed (e.g. missing structural zero mode)."""
