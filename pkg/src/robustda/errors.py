"""Exception hierarchy shared by every module of the package."""


class RobustDAError(Exception):
    """Base class for all package errors."""


class DegenerateScatterError(RobustDAError):
    """An observed block of the scatter matrix is not positive definite."""


class StructureError(RobustDAError):
    """A missing-structure matrix is invalid for the requested operation."""


class TiltDegenerateError(RobustDAError):
    """The tilted mixing conditional cannot be formed for the given inputs."""


class SamplingBudgetError(RobustDAError):
    """A rejection sampler exhausted its proposal budget."""


class H1ViolationError(RobustDAError):
    """The monotone P step is improper because a chi-square df is not positive."""


class H2ViolationError(RobustDAError):
    """The mixing distribution lacks a finite d/2-th moment."""


class NumericalDegeneracyError(RobustDAError):
    """A Cholesky factorization failed inside a sampling step."""


class ImproperConditionalError(RobustDAError):
    """The complete-data inverse Wishart conditional is improper."""


class InsufficientDataError(RobustDAError):
    """Too few draws for the requested diagnostic."""


class OracleError(RobustDAError):
    """Numerical quadrature used as a test oracle did not converge."""


class IngestionError(RobustDAError):
    """A data file could not be parsed into a dataset."""


class ConfigError(RobustDAError):
    """A run configuration is malformed or inconsistent."""
