"""Exception types shared across the package."""


class SeqDesignError(Exception):
    """Base class for all errors raised by seqdesign."""


class InvalidInput(SeqDesignError, ValueError):
    """An argument violates a documented precondition."""


class DivergenceError(SeqDesignError):
    """The integrator produced a non-finite state.

    Carries the time at which the state became non-finite and, for
    ensemble propagation, the index of the offending member.
    """

    def __init__(self, time, member=None):
        self.time = float(time)
        self.member = member
        where = f" (member {member})" if member is not None else ""
        super().__init__(f"state became non-finite at t={self.time:g}{where}")

    def __reduce__(self):
        # keep the (time, member) signature picklable across process pools
        return (self.__class__, (self.time, self.member))


class EstimatorError(SeqDesignError):
    """A nearest-neighbor estimator cannot produce a finite estimate."""


class NumericalError(SeqDesignError):
    """A linear-algebra step failed beyond the built-in safeguards."""


class ConfigError(SeqDesignError):
    """A configuration file or experiment setup is inconsistent."""
