"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad hyperparameter, bad architecture, bad CLI flags)."""


class DataFormatError(ValueError):
    """Malformed input file (IDX container, checkpoint, metrics CSV)."""


class ShapeError(ValueError):
    """Array arguments whose shapes do not match the expected contract."""


class DivergenceError(RuntimeError):
    """A numerical iteration produced a non-finite value.

    Carries the partial trajectory (scalar optimizer) or the iteration
    index (network training) so callers can report where it happened.
    """

    def __init__(self, message, trajectory=None, iteration=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.iteration = iteration
