"""Exception base classes shared across nestlab.

Every module declares its own exceptions next to the code that raises them;
they all derive from :class:`NestlabError` so callers can catch the package's
failures in one place.
"""


class NestlabError(Exception):
    """Base exception for all nestlab errors."""

    pass


class ConfigError(NestlabError):
    """Raised when a configuration value or configuration file is invalid."""

    pass
