"""Graded Sierpinski gasket approximations, renormalized energy forms, and the
restricted variational solver for the parametric nonlinear Dirichlet problem."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
