"""Exception hierarchy shared by all modules."""


class SelfAffineError(ValueError):
    """Base class for every error raised by this package."""


class ConfigError(SelfAffineError):
    """Malformed configuration document.

    ``key`` names the offending key when one can be identified.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class NotCyclicError(SelfAffineError):
    pass


class IllConditionedError(SelfAffineError):
    pass


class QUndefinedError(SelfAffineError):
    pass


class PrecisionExhausted(SelfAffineError):
    pass


class NormCertificateError(SelfAffineError):
    pass


class BudgetError(SelfAffineError):
    """A requested computation exceeds a documented size cap."""
