"""Traveling waves of a doubly nonlocal reaction-dispersal equation.

The pieces, roughly in dependency order: `kernels` (dispersal densities and
reaction coefficients), `laplace` (bilateral transforms and decay abscissas),
`dispersion` (minimal speed, kernel class, decay-rate selection), `profile`
(the wave solver and shift normalizations), `evolution` (direct time
stepping), `truncation` (compactly supported approximations), and `cli`.
"""

__version__ = "0.1.0"

from .errors import (AssumptionFailure, NonConvergence, NoWave, ToolkitError,
                     UsageError)
from .kernels import (ExpPoly, Gaussian, Kernel, KernelPair, Laplace, Params,
                      RadialExpMarginal, Tabulated, Truncated, Uniform,
                      check_assumptions, j_theta, kernel_from_dict,
                      load_problem, theta)
from .laplace import abscissa, bilateral_laplace, decay_envelope
from .dispersion import (abscissa_to_speed, classify, minimal_speed, mu_star,
                         mu_star_bracket, root_multiplicity, speed_to_abscissa)
from .profile import (GridSpec, WaveProfile, compare_up_to_shift,
                      normalize_shift, residual, solve_profile,
                      tail_asymptotics)
from .evolution import EvolutionRun, evolve, front_speed, step_data
from .truncation import TruncationTrace, c_star_sequence, theta_r, truncate

__all__ = [
    "AssumptionFailure", "NonConvergence", "NoWave", "ToolkitError",
    "UsageError", "ExpPoly", "Gaussian", "Kernel", "KernelPair", "Laplace",
    "Params", "RadialExpMarginal", "Tabulated", "Truncated", "Uniform",
    "check_assumptions", "j_theta", "kernel_from_dict", "load_problem",
    "theta", "abscissa", "bilateral_laplace", "decay_envelope",
    "abscissa_to_speed", "classify", "minimal_speed", "mu_star",
    "mu_star_bracket", "root_multiplicity", "speed_to_abscissa", "GridSpec",
    "WaveProfile", "compare_up_to_shift", "normalize_shift", "residual",
    "solve_profile", "tail_asymptotics", "EvolutionRun", "evolve",
    "front_speed", "step_data", "TruncationTrace", "c_star_sequence",
    "theta_r", "truncate", "__version__",
]
