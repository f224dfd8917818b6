"""Exception hierarchy shared by every pinewton module"""


class PinewtonError(Exception):
    """Base class for all pinewton errors"""


class DomainError(PinewtonError, ValueError):
    """Argument outside the domain of an operation"""


class GaugeUndefinedError(DomainError):
    """The convenient gauge |q|^2/||u||^2 is undefined for uncharged states"""


class DegenerateStateError(DomainError):
    """Operation needs a state with positive mass"""


class PreconditionError(DomainError):
    """A documented precondition of an operation does not hold"""


class ConfigurationError(PinewtonError, ValueError):
    """Invalid run configuration; `key` names the offending entry"""

    def __init__(self, key, message):
        super().__init__(f'{key}: {message}' if key else message)
        self.key = key
        self.message = message


class NonFiniteError(PinewtonError, ArithmeticError):
    """NaN or Inf appeared in a field or an energy"""
