"""Numerical checks for singular-drift diffusion, moving-boundary heat flow and swirl comparison chains."""

from .core import (
    DriftProfile,
    Grid1D,
    InitialData1D,
    SpaceTimeField1D,
    TimeGrid,
    drift_eval,
    make_lambda_zero,
    parse_config,
)
from .drift1d import HalfLineProblem, check_comparison, explicit_wholeline, solve_halfline, solve_robin
from .errors import *  # noqa: F401,F403
from .experiments import KINDS, run_experiment
from .gamma2d import GammaProblem, StripGrid, make_velocity, solve_gamma, verify_chain
from .holder import HolderReport, estimate_holder_at_axis, verify_lemma1, verify_lemma2
from .lambda_modulus import LambdaProblem, picard_lambda_oracle, solve_lambda, solve_truncated_ladder
from .moving_frame import MovingDomain, exterior_measure_fraction, solve_moving_domain, to_moving_frame
from .sharpness import CounterexampleSpec, build_eta, modulus_collapse_experiment, phi_eval, verify_subsolution

__version__ = "0.1.0"
