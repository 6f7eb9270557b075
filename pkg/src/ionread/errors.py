"""Exception hierarchy.

``IonreadError`` is the base for everything raised deliberately by this
package. The CLI maps ``ConfigError`` (and argparse usage errors) to exit
code 1 and every other ``IonreadError`` to exit code 2.
"""

from __future__ import annotations


class IonreadError(Exception):
    """Base class for all errors raised by ionread."""


class ConfigError(IonreadError):
    """Invalid configuration file or option combination."""


class InvalidParameterError(IonreadError, ValueError):
    """A function argument is outside its documented domain."""


class InsufficientDataError(IonreadError):
    """A record or dataset cannot support the requested operation."""


class DegenerateDataError(IonreadError):
    """Data admits no meaningful estimate (all-zero counts, single point...)."""


class DataFormatError(IonreadError):
    """A data file failed to parse; message includes row/column context."""


class FitFailureError(IonreadError):
    """Nonlinear fit failed to converge.

    Carries the best-effort parameters so callers can inspect how far the
    optimizer got.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
