"""Exception types raised across the package."""


class GFDesignError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(GFDesignError, ValueError):
    """Invalid argument or configuration value."""


class GenerationError(GFDesignError):
    """Random graph generation exhausted its retry budget."""


class ConnectivityError(GFDesignError):
    """Operation requires a connected graph."""


class TopologyError(GFDesignError):
    """Filter, shift, and signal refer to incompatible graphs."""


class NotDiagonalizableError(GFDesignError):
    """Eigendecomposition failed its reconstruction certificate."""


class RealizationError(GFDesignError):
    """A nominally real operator kept a non-negligible imaginary part."""


class InfeasibleTargetError(GFDesignError):
    """Perfect implementation of the target is impossible.

    Carries the feasibility report and, for per-node designs, the first
    offending node index.
    """

    def __init__(self, message, feasibility=None, node=None, condition=None):
        super().__init__(message)
        self.feasibility = feasibility
        self.node = node
        self.condition = condition


class CertificateError(GFDesignError):
    """A constructed operator failed its runtime eigenstructure certificate."""


class ConvergenceError(GFDesignError):
    """Iterative solver hit its iteration cap while still improving.

    ``best`` holds the best iterate found so far, ``value`` its objective.
    """

    def __init__(self, message, best=None, value=None):
        super().__init__(message)
        self.best = best
        self.value = value
