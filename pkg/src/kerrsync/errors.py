"""Exception and warning classes raised by kerrsync."""

__all__ = [
    "KerrSyncError",
    "InvalidDimensionError",
    "ConfigurationError",
    "WrongFrameError",
    "UnboundedAmplitudeError",
    "DegenerateSteadyStateError",
    "ConvergenceError",
    "TruncationError",
    "PropagatorAccuracyError",
    "PrecisionError",
    "VacuumStateError",
    "GridRefinementError",
    "SweepError",
    "PerturbationValidityWarning",
    "WignerDomainWarning",
]


class KerrSyncError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(KerrSyncError, ValueError):
    pass


class ConfigurationError(KerrSyncError, ValueError):
    """Inconsistent or incomplete model parameters."""


class WrongFrameError(KerrSyncError, ValueError):
    """A rotating-frame builder was handed a lab-frame model, or vice versa."""


class UnboundedAmplitudeError(KerrSyncError, ValueError):
    """No two-phonon damping: the amplitude is not confined to a limit cycle."""


class DegenerateSteadyStateError(KerrSyncError):
    pass


class ConvergenceError(KerrSyncError):
    """A solver finished but its result violates the residual or tail bounds.

    The ``diagnostics`` attribute carries whatever the solver measured.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class TruncationError(KerrSyncError):
    """The Fock space is too small for the requested accuracy."""


class PropagatorAccuracyError(KerrSyncError):
    pass


class PrecisionError(KerrSyncError, ArithmeticError):
    pass


class VacuumStateError(KerrSyncError, ZeroDivisionError):
    pass


class GridRefinementError(KerrSyncError, ValueError):
    """The finite-difference grid is too coarse for the local drift."""


class SweepError(KerrSyncError):
    pass


class PerturbationValidityWarning(UserWarning):
    """Parameters lie outside ``E << gamma1 + gamma2 << K``."""


class WignerDomainWarning(UserWarning):
    """The Wigner grid truncates a non-negligible part of the distribution."""
