"""Exception hierarchy shared by every stage of the pipeline."""


class FourierIdentError(Exception):
    """Base class; ``stage`` names the pipeline step that raised."""

    stage = "fourierident"


class InvalidDataError(FourierIdentError, ValueError):
    stage = "data"


class InvalidParameterError(FourierIdentError, ValueError):
    stage = "parameters"


class ParseError(FourierIdentError, ValueError):
    stage = "parse"


class SimulationDivergedError(FourierIdentError, RuntimeError):
    stage = "simulate"

    def __init__(self, step, time):
        self.step = step
        self.time = time
        super().__init__(
            f"simulation diverged at internal step {step} (t = {time:.6g}); "
            "reduce the time step"
        )


class DynamicRangeError(FourierIdentError, OverflowError):
    stage = "fourier_system"


class KernelTooNarrowError(FourierIdentError, ValueError):
    stage = "smoothing"


class TooFewModesError(FourierIdentError, ValueError):
    stage = "regions"


class EmptySystemError(FourierIdentError, ValueError):
    stage = "regions"


class InvalidSparsityError(FourierIdentError, ValueError):
    stage = "regression"


class UnderdeterminedError(FourierIdentError, ValueError):
    stage = "regression"


class IdentificationFailedError(FourierIdentError, RuntimeError):
    stage = "selection"


class UndefinedTruthError(FourierIdentError, ValueError):
    stage = "metrics"
