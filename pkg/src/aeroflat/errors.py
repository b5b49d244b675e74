"""Exception and warning types. ``exit_code`` is what the CLI returns."""


class AeroflatError(Exception):
    exit_code = 1


class ConfigError(AeroflatError, ValueError):
    exit_code = 2


class SingularityError(AeroflatError):
    """A determinant or pivot required by a parametrization vanished."""

    exit_code = 3


class ChartError(SingularityError):
    """The Euler-angle chart is not valid here (cos(gamma)=0, cos(beta)=0, V=0)."""


class FeedbackDesignError(SingularityError):
    pass


class SingularDivisionError(AeroflatError, ZeroDivisionError):
    exit_code = 3


class SeriesDomainError(AeroflatError, ValueError):
    exit_code = 3


class OrderError(AeroflatError, ValueError):
    pass


class HorizonError(AeroflatError, ValueError):
    pass


class NewtonConvergenceError(AeroflatError):
    exit_code = 4

    def __init__(self, msg, x=None, residual_norm=None):
        super().__init__(msg)
        self.x = x
        self.residual_norm = residual_norm


class TrimInfeasibleError(NewtonConvergenceError):
    pass


class SimulationDivergence(AeroflatError):
    exit_code = 5

    def __init__(self, msg, last_time=None):
        super().__init__(msg)
        self.last_time = last_time


class NewtonWarning(UserWarning):
    def __init__(self, msg, x=None, residual_norm=None):
        super().__init__(msg)
        self.x = x
        self.residual_norm = residual_norm


def annotate(exc, **ctx):
    """Attach planner location (step, iteration, stage) to an exception in place.

    The exception keeps its type so callers can still dispatch on it; the
    location is appended to the message once per key.
    """
    added = []
    for k in ("step", "iteration", "stage"):
        v = ctx.get(k)
        if v is not None and getattr(exc, k, None) is None:
            setattr(exc, k, v)
            added.append(f"{k}={v}")
    if added and exc.args:
        exc.args = (f"{exc.args[0]} [{', '.join(added)}]",) + tuple(exc.args[1:])
    return exc
