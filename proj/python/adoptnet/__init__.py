"""Coupled adoption-opinion dynamics on two-layer networks."""

from adoptnet._core import *  # noqa: F401,F403
from adoptnet._core import __doc__  # noqa: F401

__version__ = "0.1.0"
