"""Prequential plug-in, Bayes, NML and two-part codes for exponential families."""

from ._preqcode import *  # noqa: F401,F403
from ._preqcode import __doc__  # noqa: F401

__version__ = "0.1.0"
