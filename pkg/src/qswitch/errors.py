"""Exception hierarchy shared by every qswitch module."""


class QSwitchError(Exception):
    """Base class for all package errors."""


class NonPhysicalState(QSwitchError, ValueError):
    pass


class NonHermitianInput(QSwitchError, ValueError):
    pass


class NonPositiveRate(QSwitchError, ValueError):
    pass


class BadWeightMatrix(QSwitchError, ValueError):
    pass


class SingularDenominator(QSwitchError, ArithmeticError):
    """The fractional control law was evaluated on (or too close to) its singular set."""


class AssumptionViolation(QSwitchError, RuntimeError):
    """Both control modes are unusable at the same state."""


class StepTooLarge(QSwitchError, RuntimeError):
    """The integrator left the Bloch ball; reduce dt."""


class DomainError(QSwitchError, ValueError):
    pass


class WindowOutOfRange(QSwitchError, ValueError):
    pass


class ConfigError(QSwitchError, ValueError):
    """Raised for unreadable or invalid scenario configurations."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
