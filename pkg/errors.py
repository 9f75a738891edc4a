"""
Exception hierarchy shared by every package.
The CLI maps these onto exit codes: InputError -> 2, NumericError -> 3.
"""

from typing import Any, Optional


class StgcnError(Exception):
    """Base class for all errors raised by this project."""


class InputError(StgcnError, ValueError):
    """Bad input data, bad configuration or out-of-range arguments."""


class DimensionError(InputError):
    """A shape contract was violated. Messages name the offending shapes."""


class ContractError(StgcnError, RuntimeError):
    """An API was used outside its contract (e.g. backward on a non-scalar)."""


class NumericError(StgcnError, ArithmeticError):
    """Non-convergence, non-finite values or failed decompositions."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss; carries the last good checkpoint."""

    def __init__(self, message: str, checkpoint: Optional[Any] = None, history: Optional[list] = None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.history = history or []


__all__ = ["StgcnError", "InputError", "DimensionError", "ContractError", "NumericError", "DivergenceError"]
