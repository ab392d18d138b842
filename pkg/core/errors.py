"""
Exception hierarchy for the Gaussian toolkit.

Negative physics findings (an entangled ancilla, a failed witness) are
verdicts, not exceptions. These types cover bad input and failed internal
consistency checks only.
"""


class GaussianToolkitError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(GaussianToolkitError, ValueError):
    """Protocol parameters or call arguments violate their constraints."""


class DimensionError(GaussianToolkitError, ValueError):
    """Matrix shape or mode index does not fit the operation."""


class NumericalConsistencyError(GaussianToolkitError, ArithmeticError):
    """An internal cross-check failed (pairing, odd coefficients, model fit...)."""
