"""Exception types shared across the package."""


class ServolabError(Exception):
    """Base class for all package errors."""


class ConfigError(ServolabError):
    """Bad configuration: unknown key, unparseable value, or violated constraint."""


class DimensionError(ServolabError):
    """Array shapes do not match the operation's contract."""


class SingularFitError(ServolabError):
    """Normal matrix of the offline fit is singular; retry with ridge > 0."""


class WindowUnderfullError(ServolabError):
    """History window holds fewer records than the operation requires."""


class CovarianceError(ServolabError):
    """Covariance lost positive definiteness (Cholesky failed)."""


class RunAborted(ServolabError):
    """Closed-loop run hit a non-finite signal and was stopped."""
