"""Exception hierarchy shared by every module of the lab."""


class LabError(Exception):
    """Base class for all errors raised by the lab."""


class ConfigError(LabError):
    """Invalid run configuration or command-line input."""


class InputError(LabError):
    """Invalid arguments passed to an operation."""


class IncompatibleBackendError(InputError):
    """Noise model cannot be simulated on the requested backend."""


class CapacityError(LabError):
    """Tree too small for the qubit count, or a non-injective leaf map."""


class NumericalError(LabError):
    """Linear-algebra failure or a degenerate measurement branch."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context or {}


class DecodingError(LabError):
    """No perfect matching exists for the defect set."""


class NoCrossingError(LabError):
    """Two failure-rate curves do not cross inside their common range."""


class FitError(LabError):
    """Critical-scaling fit did not converge."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
