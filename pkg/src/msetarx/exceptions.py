"""Exception hierarchy.

Each class carries an ``exit_code`` so the command line layer can map
failures onto process status without inspecting messages.
"""


class MSETARXError(Exception):
    exit_code = 1


class ValidationError(MSETARXError, ValueError):
    """Malformed model, config or data.

    ``problems`` holds every violation found, not just the first.
    """

    exit_code = 3

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems) if problems else [message]


class ShapeError(ValidationError):
    pass


class NumericError(MSETARXError, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericError):
    pass


class ExplosiveTrajectoryError(NumericError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class EstimationError(NumericError):
    pass


class InsufficientRegimeSamples(EstimationError):
    def __init__(self, message, regimes):
        super().__init__(message)
        self.regimes = list(regimes)


class RankDeficientError(NumericError):
    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank
