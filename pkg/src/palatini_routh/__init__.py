"""Numerical toolkit for Palatini gravity on frame bundles.

Frames, metric jets and connections on a single chart, the reduction of
frame data to metric data, Lagrangian densities, and reconstruction of
frame sections from vacuum metrics.
"""
from .errors import ConsistencyError, EvaluationError, InconsistentFrame, NotInK, SpectrumError

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "EvaluationError",
    "InconsistentFrame",
    "NotInK",
    "SpectrumError",
    "__version__",
]
