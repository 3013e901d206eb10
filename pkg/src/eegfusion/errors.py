"""Exception types shared across the pipeline."""


class ShapeMismatchError(ValueError):
    pass


class FilterDesignError(ValueError):
    pass


class TooShortSignalError(ValueError):
    pass


class NonIntegerFactorError(ValueError):
    pass


class DegenerateWindowError(ValueError):
    pass


class EmptyBandError(ValueError):
    pass


class RankError(ValueError):
    pass


class IcaConvergenceError(RuntimeError):
    """FastICA failed to converge; carries the iteration count so the caller can retry."""

    def __init__(self, message, iterations):
        super().__init__(message)
        self.iterations = iterations


class ContainerFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class SingleClassError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass
