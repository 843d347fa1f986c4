"""Exception hierarchy.

Every computational failure derives from ``ThermoError``.  The three
subclass families map onto the command-line exit codes.
"""


class ThermoError(Exception):
    """Base class for all package errors."""


class ConfigError(ThermoError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalFailure(ThermoError):
    """A solver did not converge or could not bracket a root."""


class BudgetExceeded(ThermoError):
    """An enumeration or discretization outgrew its configured budget."""


class InvalidInput(ThermoError):
    """Input violates an operation's precondition."""


# shift_core
class EmptyTruncation(InvalidInput):
    pass


class Disconnected(InvalidInput):
    pass


# potential
class InadmissibleWord(InvalidInput):
    pass


class LetterAbsent(InvalidInput):
    pass


class NotEventuallyPositive(InvalidInput):
    pass


# thermo
class TooManyCylinders(BudgetExceeded):
    def __init__(self, limit: int, needed: int):
        self.limit = limit
        self.needed = needed
        super().__init__(f"{needed} transitions exceed the limit of {limit}")


class NoConvergence(NumericalFailure):
    def __init__(self, max_iter: int, residual: float):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(f"no convergence after {max_iter} iterations (residual {residual:.3e})")


class TailModelUnavailable(NumericalFailure):
    pass


class NoSignChange(NumericalFailure):
    pass


# counting
class BudgetExplosion(BudgetExceeded):
    def __init__(self, limit: int, partial: float):
        self.limit = limit
        self.partial = partial
        super().__init__(f"node limit {limit} reached; partial lower bound {partial}")


class CutoffTooSmall(BudgetExceeded):
    pass


class SamplePointPeriodic(InvalidInput):
    pass


# manhattan
class NoCrossing(NumericalFailure):
    pass


# fuchsian
class NumericallySingular(InvalidInput):
    pass


class DegenerateFlag(NumericalFailure):
    pass


FlagDegenerate = DegenerateFlag


class PingPongFailure(InvalidInput):
    pass
