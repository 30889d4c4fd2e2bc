"""Exception hierarchy shared across the package."""


class GridAdvError(Exception):
    """Base class for all package errors."""


class ShapeError(GridAdvError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(GridAdvError):
    """A caller violated a documented precondition (stale cache, bad labels, ...)."""


class ConfigError(GridAdvError):
    """Invalid configuration: bad parameter ranges, unknown keys, empty datasets."""


class ParseError(GridAdvError):
    """A file could not be parsed; message carries the offending line number."""


class TrainingError(GridAdvError):
    """Training diverged (non-finite loss)."""


class DegenerateInputError(GridAdvError):
    """A metric received input it cannot score (e.g. all-zero MAPE denominators)."""
