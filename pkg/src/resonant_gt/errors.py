"""Exception hierarchy shared by every module of the package."""


class ResonantError(Exception):
    """Base class for all errors raised by resonant_gt."""


class DomainError(ResonantError, ValueError):
    """An argument lies outside the domain of the operation."""


class ZeroMass(ResonantError, ArithmeticError):
    """A subgroup's total mass underflowed to zero and cannot be renormalized."""


class BarrierViolation(ResonantError, ArithmeticError):
    """A logarithmic-barrier argument is not strictly positive."""


class NonFiniteGradient(ResonantError, ArithmeticError):
    pass


class DegenerateEta(ResonantError, ArithmeticError):
    """The growth-transform normalizer is not strictly positive."""


class MaxStepsExceeded(ResonantError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotResonantNode(ResonantError, ValueError):
    """A floating or short-circuited node has no finite LC realization."""


class NoConvergence(ResonantError, RuntimeError):
    pass


class ParseError(ResonantError, ValueError):
    def __init__(self, message, line=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.path = path


class EmptySelection(ResonantError, ValueError):
    """No rows matched the requested class label."""


class ConfigError(ResonantError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
