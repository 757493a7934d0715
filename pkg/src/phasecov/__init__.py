"""Phase-covariant qubit dynamics and non-Markovianity indicators."""

from .conditions import (Commutative, General, Unital, classify_dynamics, detection_report,
                         infer_rate_constraints, predicates)
from .evolution import (Kernels, Trajectory, apply_map, choi_matrix, cp_check, evolve,
                        integrate_kernels, make_grid, ode_evolve, stationary_state)
from .expr import parse, to_text
from .qubit import BlochVector, QubitState
from .rates import Constant, Expressions, Phenomenological, PhenomParams, eval_rates, sample_rates

__version__ = "0.1.0"
