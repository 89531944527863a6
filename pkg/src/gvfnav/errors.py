"""Exception types shared across the package."""


class GvfError(Exception):
    """Base class for all gvfnav errors."""


class ShapeError(GvfError, ValueError):
    """Invalid implicit-shape specification (bad tag or parameters)."""


class FitError(GvfError, ValueError):
    """Surface fitting failed (singular or ill-conditioned system)."""


class SingularFieldError(GvfError, ArithmeticError):
    """A vector that must be normalized vanished.

    ``component`` names which field vanished so callers can report it.
    """

    def __init__(self, message: str, component: str = ""):
        super().__init__(message)
        self.component = component


class IndexUndefinedError(GvfError, ArithmeticError):
    """The field vanishes on the test curve; the winding number is undefined."""


class ConvergenceError(GvfError, ArithmeticError):
    """An iterative numerical procedure failed to converge."""


class PreconditionError(GvfError, ValueError):
    """An operation was called outside its stated domain."""


class ScenarioError(GvfError, ValueError):
    """Scenario file failed to parse or validate.

    ``key`` holds the dotted path of the offending entry when known.
    """

    def __init__(self, message: str, key: str = ""):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class ConfigError(GvfError, ValueError):
    """No automatic configuration satisfied the required invariants."""
