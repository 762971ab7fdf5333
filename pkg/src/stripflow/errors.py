"""Exception taxonomy shared by all modules.

Solver failures carry enough context to be surfaced by the CLI with a
distinct exit code per failure class.
"""


class StripflowError(Exception):
    """Base class for all package errors."""


class InvalidFieldError(StripflowError):
    """Field samples contain NaN or Inf."""


class GridMismatchError(StripflowError):
    """Operands live on different grids."""


class SymbolError(StripflowError):
    """Symbol evaluator returned non-finite values."""


class BijectivityError(StripflowError):
    """Harmonic coordinates lost bijectivity (det DPhi below threshold)."""


class SolverError(StripflowError):
    """Iterative or direct solve failed to reach tolerance."""


class GaugeError(SolverError):
    """All-Neumann problem posed without a gauge condition."""


class IncompatibleDataError(StripflowError):
    """Div-curl data violates the solvability conditions."""


class IncompleteStateError(StripflowError):
    """State is missing fields required by the requested operation."""


class UnsupportedOrderError(StripflowError):
    """Material-derivative substitution requested beyond the supported order."""


class StepSizeError(StripflowError):
    """Time step violates the CFL constraint."""


class HyperbolicityLossError(StripflowError):
    """Taylor sign changed sign; the weighted interface energy is not defined."""


class SimulationError(StripflowError):
    """Terminal simulation failure (interface left the strip, Jacobian loss)."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ResolutionWarning(UserWarning):
    """Grid cannot meaningfully represent the requested Sobolev order."""
