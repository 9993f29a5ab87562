"""Exception and warning types shared across the package."""


class GeBurstError(Exception):
    """Base class for every error raised by geburst."""


class ValidationError(GeBurstError, ValueError):
    """Input violates a documented precondition."""


class TraceParseError(ValidationError):
    """A trace file row could not be parsed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NoCrossing(GeBurstError):
    """Two latency curves never change order, one interface dominates."""


class UndefinedEstimate(GeBurstError):
    """A transition probability cannot be estimated because its source state was never observed."""

    def __init__(self, parameter: str, missing_state: str):
        self.parameter = parameter
        self.missing_state = missing_state
        super().__init__(
            f"{parameter} is undefined: no {missing_state} state with a successor was observed"
        )


class DegenerateChain(GeBurstError):
    """Chain with p = r = 0 has no unique steady state."""


class NoBursts(GeBurstError):
    """The chain never leaves the all-good state, so bursts do not occur."""


class NoBurstsWarning(UserWarning):
    """Emitted when a burst quantity is returned by convention for a burst-free model."""
