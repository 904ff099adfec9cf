"""Hard disk shift transformation toolkit.

Simulation and verification of the measure-tilting horizontal shift for
the 2-D hard disk model: grand-canonical sampling, the recursive shift
construction with its mirror and exact inverse, Jacobian-type densities,
good-configuration percolation tests, and the property/bound verification
suite.
"""

from .backend import backend_name, get_kernels
from .config import (Configuration, check_hard_core, from_csv, from_json,
                     is_hard_core, to_csv, to_json)
from .geometry import euclid, max_norm
from .grid import GridIndex, build_grid, neighbors_within
from .params import ModelParams, derive_params
from .profile import (ShiftProfileState, Slowdown, make_slowdown,
                      slowdown_value, tau_n)
from .sampler import (ChainState, boundary_triangular, derive_chain_seed,
                      make_chain, mcmc_step, sample, sample_stream)
from .transform import (InfluenceChain, TransformTrace, apply_shift,
                        build_forward, build_inverse, density,
                        influence_chains, invert, log_phi_phibar,
                        profile_state_from_trace, solve_shear_inverse,
                        trace_to_jsonl)

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "derive_params", "max_norm", "euclid",
    "Configuration", "check_hard_core", "is_hard_core",
    "to_json", "from_json", "to_csv", "from_csv",
    "GridIndex", "build_grid", "neighbors_within",
    "Slowdown", "ShiftProfileState", "tau_n", "make_slowdown", "slowdown_value",
    "TransformTrace", "InfluenceChain", "build_forward", "apply_shift",
    "build_inverse", "invert", "density", "log_phi_phibar",
    "influence_chains", "solve_shear_inverse", "profile_state_from_trace",
    "trace_to_jsonl",
    "ChainState", "boundary_triangular", "make_chain", "mcmc_step",
    "sample", "sample_stream", "derive_chain_seed",
    "backend_name", "get_kernels",
]
