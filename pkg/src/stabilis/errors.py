"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command-line
front end never needs its own lookup table.
"""

from __future__ import annotations


class StabilisError(Exception):
    """Base class; defaults to the I/O / schema exit code."""

    exit_code = 4


# -- input and schema problems (exit 4) ------------------------------------

class InvalidValue(StabilisError, ValueError):
    """A point or value contains NaN or infinity."""


class InvalidEnvelope(StabilisError, ValueError):
    """A perturbation envelope is malformed or evaluated to a negative number."""


class DimensionError(StabilisError, ValueError):
    """Arguments of different dimensions were mixed."""


class DomainError(StabilisError, ValueError):
    """A sample-based handle was asked for a value outside its domain."""


class ArityError(StabilisError, ValueError):
    """Wrong number of arguments for a multilinear form."""


class SchemaError(StabilisError, ValueError):
    """A JSON document or CLI specification string does not match the schema."""


class SingularFit(StabilisError, ArithmeticError):
    """The least-squares design matrix is rank deficient."""


# -- convergence problems (exit 2) -----------------------------------------

class NoConvergence(StabilisError, ArithmeticError):
    exit_code = 2

    def __init__(self, message: str, last_delta: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.last_delta = last_delta
        self.iterations = iterations


class ArgumentCapExceeded(NoConvergence):
    """Dilation would push ``2**n * x`` beyond the configured argument cap."""


# -- violated summability hypotheses (exit 3) -----------------------------

class HypothesisError(StabilisError):
    exit_code = 3


class CriticalExponentError(HypothesisError, ValueError):
    """The envelope exponent sits exactly at the critical value; neither direction sums."""


class DivergentSeries(HypothesisError, ArithmeticError):
    """The requested bound series does not converge for this envelope."""


class RegimeError(HypothesisError, ValueError):
    """A closed-form constant was requested outside its exponent range."""


class ParityError(HypothesisError, ValueError):
    pass


class EvennessError(ParityError):
    pass


class OddnessError(ParityError):
    pass
