"""Exception types shared across the package."""


class MlionError(Exception):
    """Base class for package-specific errors."""


class UndefinedStatisticError(MlionError, ValueError):
    """A statistic has no defined value on this input (zero variance, empty partner set, ...)."""


class AsymmetricInputError(MlionError, ValueError):
    """An operation that requires a symmetric matrix received an asymmetric one."""


class ParseError(MlionError, ValueError):
    """Malformed input file content.

    Carries the offending path and, where known, the 1-based line number.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
            if line is not None:
                where = f"{path}:{line}: "
        super().__init__(where + message)
