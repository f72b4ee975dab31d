"""CLI commands for MR-CCC."""

from .benchmark import benchmark
from .fit import fit
from .screen import screen
from .simulate import simulate
from .utility import version

__all__ = ["benchmark", "fit", "screen", "simulate", "version"]
