"""Exception hierarchy shared across the package."""


class BiochainError(Exception):
    """Base class for all package errors."""


class ConfigError(BiochainError):
    """A configuration file or value could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


# ledger
class UnknownContract(BiochainError):
    pass


class RevertedCall(BiochainError):
    """Raised after a reverted transaction was mined; carries its receipt."""

    def __init__(self, message, receipt=None):
        super().__init__(message)
        self.receipt = receipt


class TooFewRepetitions(BiochainError):
    pass


# merkle / schemes
class UnknownTemplateId(BiochainError, KeyError):
    pass


class IntegrityViolation(BiochainError):
    pass


class NotEnrolled(BiochainError, KeyError):
    pass


class OffChainWriteError(BiochainError):
    pass


# biometrics
class LengthMismatch(BiochainError, ValueError):
    pass


class DimensionMismatch(BiochainError, ValueError):
    pass


class DegenerateModel(BiochainError, ValueError):
    pass


class ChannelMismatch(BiochainError, ValueError):
    pass


class EmptySequence(BiochainError, ValueError):
    pass


class WrongEnrollmentCount(BiochainError, ValueError):
    pass


class EmptyScores(BiochainError, ValueError):
    pass


class SizeExceedsDimension(BiochainError, ValueError):
    pass


class NonFiniteInput(BiochainError, ValueError):
    pass


class CriterionFailure(BiochainError):
    pass
