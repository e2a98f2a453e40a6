"""Exception types shared across the package."""

from __future__ import annotations


class InputDomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericalError(RuntimeError):
    """A quadrature or series evaluation failed to reach its tolerance.

    Attributes
    ----------
    achieved : float
        Best error estimate reached before giving up.
    """

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved
