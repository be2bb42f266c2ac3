"""Ergodicity diagnostics for Markov-Feller semigroups."""

from ._feller import *  # noqa: F401,F403
from ._feller import __version__  # noqa: F401
