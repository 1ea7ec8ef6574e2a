class SegoError(Exception):
    """Base class for every error raised by this project."""


class ConfigurationError(SegoError):
    """Bad or missing configuration. The CLI exits with code 2."""


class DataIntegrityError(SegoError):
    """Input data that violates the dataset format. The CLI exits with code 3."""


class ParseError(DataIntegrityError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ContractViolation(SegoError, ValueError):
    """A shape or precondition check failed."""


class UsageError(SegoError, RuntimeError):
    pass


class UndefinedMetricError(SegoError, ValueError):
    pass


class RefusalError(SegoError, ValueError):
    """Input exceeds what an exhaustive routine agrees to enumerate."""
