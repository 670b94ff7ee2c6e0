"""Exception hierarchy shared across the package.

Two branches matter for the CLI: ``InputError`` covers bad configuration or
malformed input files (exit code 2), ``NumericalError`` covers data-driven
numerical failures such as divergence or singular matrices (exit code 3).
"""


class RiskfactorsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RiskfactorsError):
    """Invalid configuration, paths, or input file contents."""


class ConfigError(InputError):
    pass


class PanelError(InputError):
    pass


class DuplicateLabelError(PanelError):
    pass


class DateParseError(PanelError):
    pass


class InsufficientDataError(PanelError):
    pass


class MissingCategoryError(PanelError):
    pass


class NonPositivePriceError(PanelError):
    pass


class NumericalError(RiskfactorsError):
    """Numerical failure while processing otherwise well-formed input."""


class ZeroVarianceError(NumericalError):
    def __init__(self, label):
        super().__init__(f"column {label!r} has zero sample variance")
        self.label = label


class EigensolverError(NumericalError):
    pass


class SingularCovarianceError(NumericalError):
    pass


class CollinearityError(NumericalError):
    def __init__(self, labels):
        super().__init__(f"factor columns are collinear: {', '.join(labels)}")
        self.labels = tuple(labels)


class DivergenceError(NumericalError):
    pass
