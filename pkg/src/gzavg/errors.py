"""Exception hierarchy shared by the gzavg modules."""


class GZAvgError(Exception):
    """Base class for every domain error raised by gzavg."""


class DiscriminantError(GZAvgError, ValueError):
    pass


class NotNegative(DiscriminantError):
    pass


class NotOdd(DiscriminantError):
    pass


class NotFundamental(DiscriminantError):
    pass


class TableSizeMismatch(GZAvgError, ValueError):
    pass


class DomainError(GZAvgError, ValueError):
    pass


class PrecisionNotReached(GZAvgError, ArithmeticError):
    pass


class RangeError(GZAvgError, ValueError):
    pass


class BranchError(GZAvgError, ValueError):
    pass


class TailDiverges(GZAvgError, ArithmeticError):
    pass


class RamifiedPrime(GZAvgError, ValueError):
    pass


class CaseMismatch(GZAvgError, ValueError):
    pass


class MissingThetaParams(GZAvgError, ValueError):
    pass


class SingularGram(GZAvgError, ArithmeticError):
    pass


class LLogBoundFails(GZAvgError):
    pass


class ConfigError(GZAvgError, ValueError):
    pass


class ParseError(GZAvgError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
