"""Exception types raised by the solver modules."""


class AxishockError(Exception):
    """Base class. ``stage`` names the pipeline step that failed, if known."""

    exit_code = 1

    def __init__(self, message, stage=None, **info):
        super().__init__(message)
        self.stage = stage
        self.info = info


class DomainError(AxishockError, ValueError):
    exit_code = 2


class NotAShockError(AxishockError, ValueError):
    exit_code = 2


class HypothesisError(AxishockError, ValueError):
    """An input violates one of the standing hypotheses on Theta, P_e, gas."""

    exit_code = 3


class InadmissibleExitPressure(AxishockError):
    exit_code = 4

    def __init__(self, r_low, pe, r_high, stage="admissibility"):
        super().__init__(
            f"exit pressure functional {pe:.6g} outside admissible band "
            f"({r_low:.6g}, {r_high:.6g})",
            stage=stage,
            r_low=r_low,
            pe=pe,
            r_high=r_high,
        )
        self.r_low = r_low
        self.pe = pe
        self.r_high = r_high


class DegenerateMapError(AxishockError):
    exit_code = 5


class InvalidFrontError(AxishockError):
    exit_code = 5


class AxisEvaluationError(AxishockError, ValueError):
    exit_code = 5


class SingularShockMatrixError(AxishockError):
    exit_code = 5


class GridError(AxishockError, ValueError):
    exit_code = 6


class ExtrapolationError(AxishockError):
    exit_code = 6


class UnsolvableDataError(AxishockError):
    exit_code = 7

    def __init__(self, defect, tol, stage="elliptic"):
        super().__init__(
            f"solvability defect {defect:.3e} exceeds tolerance {tol:.3e}",
            stage=stage,
            defect=defect,
            tol=tol,
        )
        self.defect = defect


class ConsistencyError(AxishockError):
    exit_code = 7


class PositionUpdateError(AxishockError):
    exit_code = 8


class DegenerateDerivativeError(AxishockError):
    exit_code = 8


class NonconvergenceError(AxishockError):
    exit_code = 9

    def __init__(self, message, stage=None, history=None, best=None):
        super().__init__(message, stage=stage)
        self.history = history or []
        self.best = best


class DivergenceError(NonconvergenceError):
    pass


class DegenerateRootWarning(UserWarning):
    pass
