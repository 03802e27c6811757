"""Exception hierarchy shared by all ymh modules."""


class YMHError(Exception):
    """Base class for every error raised by ymh."""


class ZeroHiggs(YMHError, ValueError):
    """Longitudinal/transverse split requested where the Higgs field vanishes."""


class BallOutOfDomain(YMHError, ValueError):
    pass


class NonconformingPerturbation(YMHError, ValueError):
    pass


class NonconformingGauge(YMHError, ValueError):
    pass


class WindowOutOfDomain(YMHError, ValueError):
    pass


class DomainTooSmall(YMHError, ValueError):
    pass


class HiggsVanishesOnSphere(YMHError, ValueError):
    pass


class Diverged(YMHError, ArithmeticError):
    """Energy failed to decrease even at the smallest admissible step."""


class NoConvergence(YMHError, ArithmeticError):
    pass


class SnapshotError(YMHError, IOError):
    pass


class BadMagic(SnapshotError):
    pass


class TruncatedFile(SnapshotError):
    pass


class DimMismatch(SnapshotError):
    pass


class ParseError(YMHError, ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(YMHError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
