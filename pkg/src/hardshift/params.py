"""Model parameters for the hard disk shift transformation.

The box is ``[-n, n]^2`` with unit-diameter disks.  From the activity ``z``
and the Lipschitz budget ``delta`` we derive the interaction range ``eps``
of the slow-down constraints and the flat center shift
``delta * eps * sqrt(ln n)``.  All derived floats are computed once here so
that every backend (pure Python and compiled) consumes bit-identical
constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """Validated parameter set with precomputed derived quantities."""

    n: int
    z: float
    delta: float
    # derived
    epsilon: float
    target_shift: float
    theorem_regime: bool
    # precomputed helpers shared by all numeric code paths
    log_n: float
    sqrt_log_n: float
    n_two_thirds: float
    mid_coef: float        # 3*delta*eps/sqrt(ln n), slope scale of the ramp
    delta_eps: float       # proviso threshold for slow-down heights
    one_plus_eps: float

    @property
    def flat_value(self) -> float:
        """Height of the flat central part of the base profile."""
        return self.target_shift


def derive_params(n: int, z: float, delta: float) -> ModelParams:
    """Validate raw inputs and derive the dependent model constants.

    eps = min(1/(48 z), 1/4); target shift = delta*eps*sqrt(ln n).
    The quantitative-bound regime needs n >= 200; structural operations
    work for any n >= 8.
    """
    if not isinstance(n, (int,)) or isinstance(n, bool):
        raise ValueError(f"n must be an integer, got {n!r}")
    if n < 8:
        raise ValueError(f"n must be >= 8, got {n}")
    if not (z > 0):
        raise ValueError(f"z must be > 0, got {z}")
    if not (0 < delta <= 0.5):
        raise ValueError(f"delta must be in (0, 1/2], got {delta}")

    eps = min(1.0 / (48.0 * z), 0.25)
    log_n = math.log(n)
    sqrt_log_n = math.sqrt(log_n)
    target = delta * eps * sqrt_log_n
    return ModelParams(
        n=n,
        z=float(z),
        delta=float(delta),
        epsilon=eps,
        target_shift=target,
        theorem_regime=n >= 200,
        log_n=log_n,
        sqrt_log_n=sqrt_log_n,
        n_two_thirds=float(n) ** (2.0 / 3.0),
        mid_coef=3.0 * delta * eps / sqrt_log_n,
        delta_eps=delta * eps,
        one_plus_eps=1.0 + eps,
    )
