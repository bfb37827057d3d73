"""Exterior calculus, characteristics and Hamiltonian flows over symbolic expressions."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
