"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid problem or run configuration."""


class CacheIntegrityError(IOError):
    """A generator cache file is corrupt or truncated."""


class SolverFailure(RuntimeError):
    """Raised by callers that want a failed :class:`SolveReport` to be fatal."""
