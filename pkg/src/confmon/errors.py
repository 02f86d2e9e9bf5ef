"""Shared exception hierarchy.

Every domain failure raises a subclass of ConfmonError so the command line
front end can map it to a nonzero exit code without catching bare Exception.
"""


class ConfmonError(Exception):
    """Base class for all domain errors raised by this package."""


class ModelError(ConfmonError):
    """Malformed net structure or an operation on an incompatible marking."""


class LogError(ConfmonError):
    """Malformed event log text or an invalid trace."""


class PlayoutError(ConfmonError):
    """Stochastic playout could not produce the requested traces."""


class AlignmentError(ConfmonError):
    """Alignment search failed (state cap hit, or no path to the final marking)."""


class InjectError(ConfmonError):
    """Anomaly injection could not be applied to a trace."""


class DetectError(ConfmonError):
    """Detector training, scoring, or serialization failed."""


class MetricsError(ConfmonError):
    """Metric computation on degenerate input (e.g. single-class ROC)."""
