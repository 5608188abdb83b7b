"""Python bindings for the multi-instance sampling estimator library."""

from ._samplest import *  # noqa: F401,F403
from ._samplest import __doc__  # noqa: F401
