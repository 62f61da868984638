"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input (graphs, patterns, attacks, secrets)."""


class ResourceLimitError(RuntimeError):
    """A simulation or enumeration would exceed its configured size guard."""


class SequencingError(RuntimeError):
    """A protocol step was requested before the data it depends on exists."""
