"""Numerics for the logistic reaction-diffusion equation with a
time-dependent growth rate: coefficient paths and their ergodic-style
window means, a monotone IMEX solver, front tracking and spreading-speed
estimates, explicit comparison bounds, and a reproducible experiment CLI.
"""

__version__ = "0.1.0"

from . import coeff
from . import equilibria
from . import kppsolve
from . import fronts
from . import subsuper

__all__ = ["coeff", "equilibria", "kppsolve", "fronts", "subsuper",
           "__version__"]
