"""Exception hierarchy shared across the package.

CLI exit codes: InputError -> 2, InfeasibleError -> 1, ConfigError -> 3.
"""


class CidesignError(Exception):
    """Base class for all package errors."""


class InputError(CidesignError):
    """Malformed input: bad vertex sets, parse errors, violated preconditions."""


class ParseError(InputError):
    """Graph or config file rejected; carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ActionError(InputError):
    """Illegal action submitted to the intervention environment."""


class GenerationError(InputError):
    """Random instance generation exhausted its retry budget."""


class ResourceLimitError(InputError):
    """An operation exceeded its declared size guard."""


class InfeasibleError(CidesignError):
    """No solution exists (typically due to infinite intervention costs)."""


class ConfigError(CidesignError):
    """Missing or unusable solver/backend configuration."""


class SolveTimeout(ConfigError):
    """An external solver exceeded its time budget."""


class ModelError(CidesignError):
    """A solver model failed verification against the hard clauses."""
