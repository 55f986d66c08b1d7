"""Exception hierarchy.

Every error carries a short ``category`` string; the CLI prints it and maps
it to a distinct exit code.
"""


class StnetError(Exception):
    category = "error"
    exit_code = 1


class ShapeError(StnetError, ValueError):
    category = "shape"
    exit_code = 3


class ConfigError(StnetError, ValueError):
    category = "config"
    exit_code = 4


class NumericInputError(StnetError, ValueError):
    category = "numeric-input"
    exit_code = 5


class OracleError(StnetError, ArithmeticError):
    category = "oracle"
    exit_code = 5


class UsageError(StnetError, RuntimeError):
    category = "usage"
    exit_code = 2


class FormatError(StnetError, ValueError):
    category = "format"
    exit_code = 6


class IntegrityError(StnetError, ValueError):
    category = "integrity"
    exit_code = 7


class WeightImportError(StnetError, ValueError):
    category = "import"
    exit_code = 7


class LabelError(StnetError, ValueError):
    category = "label"
    exit_code = 8


class EmptyClipError(StnetError, ValueError):
    category = "empty-clip"
    exit_code = 8


class StratificationError(StnetError, ValueError):
    category = "stratification"
    exit_code = 8


class DataError(StnetError, ValueError):
    category = "data"
    exit_code = 8


class InsufficientFramesError(StnetError, ValueError):
    category = "insufficient-frames"
    exit_code = 8


class DivergenceError(StnetError, ArithmeticError):
    category = "divergence"
    exit_code = 9

    def __init__(self, message, epoch=None, step=None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step
