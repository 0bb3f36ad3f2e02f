"""Exception types shared across the package."""


class ContractOptError(Exception):
    """Base class for all contractopt errors."""


class UnsupportedDimensionError(ContractOptError):
    """Requested Sobol dimension exceeds the direction-number table."""


class InvalidConfigError(ContractOptError):
    """A configuration value violates its contract (e.g. odd antithetic batch)."""


class NumericalDomainError(ContractOptError):
    """A numerical evaluation left its valid domain (non-finite value, bad input)."""


class CurvatureError(ContractOptError):
    """Conjugate gradient detected a non-positive-definite direction."""

    def __init__(self, iteration: int, curvature: float):
        self.iteration = iteration
        self.curvature = curvature
        super().__init__(
            f"non-positive curvature {curvature:.6g} at CG iteration {iteration}"
        )


class ConfigFileError(ContractOptError):
    """A run/sweep configuration file is malformed; message names the offending key."""
