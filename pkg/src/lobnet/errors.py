"""Exception types shared across the package."""


class LobnetError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(LobnetError, ValueError):
    """A domain value violates its invariants."""


class InsufficientLiquidityError(LobnetError):
    """A market order asks for more volume than the opposite side holds."""


class DataFormatError(LobnetError):
    """An input file does not parse as the expected format."""


class ConfigError(LobnetError):
    """A run configuration is missing or inconsistent."""


class CorruptCheckpointError(LobnetError):
    """A checkpoint file is truncated or fails integrity checks."""


class TrainingDivergedError(LobnetError):
    """Training produced a non-finite loss."""


class DegenerateDesignError(LobnetError):
    """The perturbation design matrix cannot support a stable fit.

    Usually fixed by increasing n_samples.
    """


class LookaheadError(LobnetError):
    """Test-period data was read during a training phase."""
