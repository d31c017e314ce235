"""Slepian-sequence stimulation of Volterra systems.

Subpackages cover DPSS generation, Laguerre-built Volterra systems,
higher-order suppression bounds, input generators, the inner-product
detector, least-squares kernel identification and the experiment
harness that ties them together.
"""

__version__ = "0.1.0"


class ParameterError(ValueError):
    """Raised when a configuration violates a documented invariant."""


class ResolutionError(ValueError):
    """Raised when a frequency grid is too coarse for the requested quantity."""


class NumericalError(ArithmeticError):
    """Raised when a numerical routine fails or produces non-finite values."""
