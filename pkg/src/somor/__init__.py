"""Structure-preserving reduction of second-order systems by moment matching
and second-order Loewner interpolation."""

__version__ = '0.1.0'

from .errors import *  # noqa: F401,F403
from .system import (SecondOrderSystem, eval_transfer, eval_transfer_derivative, load_system,
                     msd_benchmark, save_system)
from .moments import (InterpolationSet, input_moments, jordan_set, moments_oracle, output_moments,
                      solve_pi, solve_upsilon)
from .reduction import (ReducedModel, derivative_matching, family_g, family_h, passive_galerkin_g,
                        passive_galerkin_h, pole_placement, stable_choice_g, stable_choice_h,
                        two_sided, verify_match)
from .loewner import (LoewnerTriple, TangentialData, build_loewner, interpolant_family_k,
                      interpolant_family_m, rayleigh_khat, rayleigh_mhat, sample_tangential,
                      verify_tangential)
