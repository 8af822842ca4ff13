"""Exception types shared across the package."""


class BisenseError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometry(BisenseError):
    """Scatterer coincides (within tolerance) with a transmit or receive point."""


class InvalidArray(BisenseError):
    """Array constructor arguments out of range (element count, spacing)."""


class SingularEFIM(BisenseError):
    """Position information matrix is singular or numerically unusable."""


class InfeasibleScenario(BisenseError):
    """No feasible beam covariance yields a finite position error bound."""


class InvalidAlpha(BisenseError):
    """Two-beam power split parameter outside the open interval (0, 1)."""


class ConfigError(BisenseError):
    """Run configuration file is malformed, has unknown keys, or bad values."""
