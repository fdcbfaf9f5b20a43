"""Charged-particle trapping on surfaces.

Level sets of the field strength, action profiles and the twist quantity,
orbit integration, trapping and drift experiments, and the CLI commands.
"""

from ._core import Error, Expr, ParseError, Surface, run

__all__ = ["Error", "Expr", "ParseError", "Surface", "run"]
__version__ = "0.1.0"
