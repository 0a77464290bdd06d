"""Spectral coordinates of opers and the Hitchin section, computed two ways."""
from . import catalog, periods, ieq, oper_de, pde, hitchin_de, metric, compare  # noqa: F401
from .catalog import get_theory, build_differentials, THEORY_NAMES  # noqa: F401
from .compare import reldiff  # noqa: F401

__version__ = "0.1.0"
