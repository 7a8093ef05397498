"""Multiscale polarization toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import DegenerateError

__version__ = "0.1.0"
