"""Generalized and extended Prandtl-Ishlinskii hysteresis models.

Thin package over the compiled ``_egpi`` extension.
"""

from ._egpi import *  # noqa: F401,F403
from ._egpi import __version__  # noqa: F401
