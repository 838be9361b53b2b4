"""
tanpq

A numerical laboratory for the transcendental family
f_lambda(z) = lambda * tan^p(z^q): parameter classification, parameter and
dynamical plane rendering, virtual centers and verification suites.
"""

__version__ = "0.3.0"
__description__ = "Numerical laboratory for the family lambda * tan^p(z^q)"

from .core.errors import TanpqError
from .core.family import FamilyParams, evaluate, evaluate_derivative, free_asymptotic_value
from .core.orbit import OrbitBudget, classify_many, classify_parameter, iterate_orbit, refine_cycle
from .core.centers import find_virtual_center, period2_centers
from .render.plane import Window, render_dynamical_plane, render_parameter_plane, set_threads
from .lab.suites import run_suite

__all__ = [
    "FamilyParams",
    "OrbitBudget",
    "TanpqError",
    "Window",
    "classify_many",
    "classify_parameter",
    "evaluate",
    "evaluate_derivative",
    "find_virtual_center",
    "free_asymptotic_value",
    "iterate_orbit",
    "period2_centers",
    "refine_cycle",
    "render_dynamical_plane",
    "render_parameter_plane",
    "run_suite",
    "set_threads",
]
