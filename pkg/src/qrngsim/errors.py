"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary parameter validation; the classes
here exist where callers (in particular the CLI) need to distinguish failure
modes by exit code.
"""


class QrngSimError(Exception):
    """Base class for toolkit-specific failures."""


class ConfigError(QrngSimError):
    """Invalid or inconsistent experiment configuration."""


class DataFormatError(QrngSimError):
    """Malformed input file (samples, histogram, curve, report)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class UnimodalPdfError(QrngSimError):
    """Fewer than two peaks found where a bimodal distribution is required."""


class UntrustedSourceError(QrngSimError):
    """The reduction factor is infinite: no extractable randomness."""


class NeedsMoreEntropyError(QrngSimError):
    """Seed generation ran out of debiased bits."""

    def __init__(self, needed, available):
        super().__init__(
            f"need {needed} debiased bits, only {available} available "
            f"(deficit {needed - available})"
        )
        self.needed = needed
        self.available = available
        self.deficit = needed - available


class OutOfModelError(QrngSimError):
    """Measured statistic falls outside the calibrated lookup domain."""
