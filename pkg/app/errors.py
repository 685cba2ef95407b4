"""Exception hierarchy shared by the library, the CLI and the HTTP surface."""


class DDFError(Exception):
    """Base class for every error raised by the simulator."""


class ParameterError(DDFError, ValueError):
    """Invalid parameter, estimator setting or scheme/frame combination."""


class DomainError(DDFError, ValueError):
    """Input outside the mathematical domain (non-finite SNR, foreign symbol)."""


class FrameRangeError(DDFError, IndexError):
    """Symbol or sub-frame index beyond the frame."""


class UnsupportedSchemeError(DDFError):
    """Scheme known, but not supported by the requested operation."""


class ConfigurationError(DDFError):
    """Missing or inconsistent run configuration (e.g. no MI table for an order)."""


class OrderingError(DDFError):
    """Bisection bracket is not monotone in the searched SNR."""
