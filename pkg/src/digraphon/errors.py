"""Exception types shared across the package."""


class DigraphonError(Exception):
    """Base class for errors raised by this package."""


class BudgetError(DigraphonError):
    """An exact computation would exceed its enumeration or memory budget."""


class StructureError(DigraphonError):
    """Two step kernels do not share a compatible block structure."""


class GenerationError(DigraphonError):
    """A randomized generator exhausted its restart budget."""


class NumericalError(DigraphonError):
    """A numerical routine failed to converge or left a residual above tolerance."""


class IsolationError(DigraphonError):
    """An epsilon ball around a spectral point contains another spectral point."""
