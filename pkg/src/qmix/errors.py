"""Exception types. ``category`` is the short token the CLI prints on failure."""


class QmixError(Exception):
    category = "error"


class DimensionError(QmixError, ValueError):
    category = "dimension"


class DomainError(QmixError, ValueError):
    category = "domain"


class InvalidStateError(QmixError, ValueError):
    category = "invalid-state"


class ConvergenceError(QmixError, RuntimeError):
    category = "convergence"

    def __init__(self, message, best_value=None, best_params=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_params = best_params


class BudgetExhaustedError(QmixError, RuntimeError):
    category = "budget"


class FormatError(QmixError, ValueError):
    category = "format"


class ChecksumError(FormatError):
    category = "checksum"


class DatasetError(QmixError, ValueError):
    category = "dataset"
