"""Exception hierarchy shared by all modules."""


class StripeMirrorError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StripeMirrorError):
    """A spec or configuration value violates an invariant."""


class ConfigError(ValidationError):
    """A config file or CLI argument could not be parsed or validated."""


class DomainError(StripeMirrorError):
    """An operation was evaluated outside its domain of validity."""


class PenetrationError(DomainError):
    """Reflection condition not met; carries the surface field that would be needed."""

    def __init__(self, message, required_b1=None):
        super().__init__(message)
        self.required_b1 = required_b1


class IntegrationError(StripeMirrorError):
    """Trajectory integration failed (step underflow or step budget exhausted)."""


class WindowError(StripeMirrorError):
    """An analysis window is empty, under-determined, or mis-ordered."""
