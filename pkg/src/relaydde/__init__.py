"""Exact analysis toolkit for the relay delay equation x'(t) = R(x(t-1)).

The relay nonlinearity makes every solution piecewise affine, so
simulation, periodic orbits, the two-zero return map and the monodromy
analysis of the rapid cycle are all computable in closed form; with
rational inputs every reported quantity is exact.
"""
from .core import Params, relay_F, relay_R, to_potential
from .engine import (DEFAULT_EVENT_CAP, EngineGuardError, InitialState,
                     Trajectory, canonicalize, detect_period, simulate,
                     states_match, window_state, zeros_of)
from .orbits import (Classification, ClassExitError, ExitReport,
                     InconclusiveError, OrbitConstants, PoincarePair,
                     UnsupportedClassError, admissibility_bounds, admissible,
                     classify, constants, fixed_point, grid_survivors,
                     match_x0, match_y0, phi_closed_form, phi_iterate,
                     phi_map, predict_one_zero_settling, x0_eval, x0_window,
                     y0_eval, y0_window)
from .stability import (GrowthRow, InstabilityReport, LinearityError,
                        MonodromyMatrix, PerturbationVector, apply_matrix,
                        delta_max, eigenplane_norm, eigenplane_norm_sq,
                        eigenplane_part, instability_demo, monodromy_matrix,
                        multipliers, one_period_map, perturbation_profile,
                        perturbed_initial_state)

__version__ = "0.1.0"

__all__ = [n for n in dir() if not n.startswith("_")]
