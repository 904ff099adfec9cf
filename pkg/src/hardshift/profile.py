"""Shift profiles: base profile, slow-down constraints, minimum envelope.

The base profile assigns every location a rightward shift depending only on
its max-norm distance from the origin: a flat plateau inside ``n^{2/3}``, a
logarithmic ramp down to the box edge, zero outside.  Each already-placed
particle contributes a cone-shaped slow-down constraint that caps the shift
of nearby points; if the cone would need a slope above ``delta`` it is
flattened to a global constant (the proviso).  The effective shift profile
is the pointwise minimum of the base profile and all constraints, which
keeps it Lipschitz with constant ``delta``.

Numeric expressions here are the single source of truth for the pure
Python code paths; the compiled kernels mirror them operation for
operation so both backends produce bit-identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import euclid, max_norm
from .params import ModelParams


def tau_n(s: float, params: ModelParams) -> float:
    """Base profile as a function of the max norm ``s``.

    Flat at ``delta*eps*sqrt(ln n)`` up to ``n^{2/3}``, then
    ``(3 delta eps / sqrt(ln n)) * (ln n - ln s)`` up to ``n``, then 0.
    The two breakpoints are continuous; negative ``s`` falls into the flat
    branch (max norms are nonnegative at every call site).
    """
    if s <= params.n_two_thirds:
        return params.target_shift
    if s >= params.n:
        return 0.0
    return params.mid_coef * (params.log_n - math.log(s))


def base_derivative_e1(x, params: ModelParams) -> float:
    """e1-directional derivative of the base profile at ``x``.

    Zero on the flat plateau and outside the box; on the middle ramp it is
    ``-sign(x1) * mid_coef / max_norm(x)`` when the max norm is attained by
    the first coordinate, else zero.  On the diagonal ``|x1| == |x2|`` the
    first-coordinate branch is used (a null set).
    """
    x0, x1 = float(x[0]), float(x[1])
    s = max(abs(x0), abs(x1))
    if s <= params.n_two_thirds or s >= params.n:
        return 0.0
    if abs(x0) >= abs(x1):
        return -params.mid_coef / s if x0 > 0.0 else params.mid_coef / s
    return 0.0


@dataclass(frozen=True)
class Slowdown:
    """Cone constraint emitted by a particle at ``center`` shifted by ``base``.

    ``height`` is the base-profile headroom at distance ``1+eps`` from the
    center; ``flattened`` marks the proviso case (constraint == ``base``
    everywhere).
    """

    center: tuple[float, float]
    base: float
    height: float
    flattened: bool


def make_slowdown(p, t: float, params: ModelParams) -> Slowdown:
    """Build the slow-down constraint for a particle at ``p`` with shift ``t``."""
    t = float(t)
    if t < 0:
        raise ValueError(f"shift amount must be >= 0, got {t}")
    center = (float(p[0]), float(p[1]))
    h = abs(tau_n(max(abs(center[0]), abs(center[1])) - 1.0 - params.epsilon,
                  params) - t)
    return Slowdown(center=center, base=t,
                    height=h, flattened=h > params.delta_eps)


def slowdown_value(sd: Slowdown, x, params: ModelParams) -> float:
    """Value of one constraint at ``x``; +inf outside a finite cone's support."""
    if sd.flattened:
        return sd.base
    d = euclid(x, sd.center)
    if d > params.one_plus_eps:
        return math.inf
    if d <= 1.0:
        return sd.base
    return sd.base + sd.height / params.epsilon * (d - 1.0)


def slowdown_derivative_e1(sd: Slowdown, x, params: ModelParams) -> float:
    """e1 derivative of one constraint at ``x`` (0 off the open ramp)."""
    if sd.flattened:
        return 0.0
    d = euclid(x, sd.center)
    if 1.0 < d < params.one_plus_eps:
        return sd.height / params.epsilon * (x[0] - sd.center[0]) / d
    return 0.0


BASE_ID = -1  # active-constraint id of the base profile


class ShiftProfileState:
    """Pointwise-minimum envelope of the base profile and added constraints.

    Constraints are indexed in insertion order (boundary constraints first,
    then one per construction step).  Ties in the minimum are resolved by a
    fixed priority: base profile, then constraints by ascending index.
    Finite cones live in a cell grid keyed by their center; flattened
    constraints contribute through a running global minimum.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        self.slowdowns: list[Slowdown] = []
        self.boundary_count = 0
        self._buckets: dict[tuple[int, int], list[int]] = {}
        self._flat_ids: list[int] = []

    # -- construction -------------------------------------------------

    def add_slowdown(self, sd: Slowdown) -> int:
        idx = len(self.slowdowns)
        self.slowdowns.append(sd)
        if sd.flattened:
            self._flat_ids.append(idx)
        else:
            cell = self._cell_of(sd.center[0], sd.center[1])
            self._buckets.setdefault(cell, []).append(idx)
        return idx

    def add_boundary(self, boundary_points) -> None:
        """Install the step-0 constraints (shift 0) for boundary particles.

        Only particles within max norm ``n + 1 + eps`` can influence any
        interior point, so the rest are skipped.
        """
        if self.slowdowns:
            raise RuntimeError("boundary constraints must be added first")
        reach = self.params.n + self.params.one_plus_eps
        for p in boundary_points:
            if max_norm(p) <= reach:
                self.add_slowdown(make_slowdown(p, 0.0, self.params))
        self.boundary_count = len(self.slowdowns)

    # -- queries --------------------------------------------------------

    def _cell_of(self, x: float, y: float) -> tuple[int, int]:
        c = self.params.one_plus_eps
        return (math.floor(x / c), math.floor(y / c))

    def _near_ids(self, x) -> list[int]:
        cx, cy = self._cell_of(float(x[0]), float(x[1]))
        out = []
        for ix in (cx - 1, cx, cx + 1):
            for iy in (cy - 1, cy, cy + 1):
                out.extend(self._buckets.get((ix, iy), ()))
        return out

    def envelope_eval(self, x) -> tuple[float, int]:
        """Minimum value at ``x`` and the id of the attaining constraint.

        Returns ``(value, BASE_ID)`` when the base profile attains the
        minimum; otherwise the smallest attaining constraint index.
        """
        params = self.params
        best = tau_n(max(abs(float(x[0])), abs(float(x[1]))), params)
        act = BASE_ID
        candidates = sorted(self._near_ids(x)) + self._flat_ids
        candidates.sort()
        x0, x1 = float(x[0]), float(x[1])
        for j in candidates:
            sd = self.slowdowns[j]
            if sd.flattened:
                v = sd.base
            else:
                dx = x0 - sd.center[0]
                dy = x1 - sd.center[1]
                d = math.sqrt(dx * dx + dy * dy)
                if d > params.one_plus_eps:
                    continue
                if d <= 1.0:
                    v = sd.base
                else:
                    v = sd.base + sd.height / params.epsilon * (d - 1.0)
            if v < best:
                best = v
                act = j
        return best, act

    def value_at(self, x) -> float:
        return self.envelope_eval(x)[0]

    def derivative_e1(self, x) -> float:
        """e1 derivative of the active constraint at ``x`` (a.e. defined)."""
        value, act = self.envelope_eval(x)
        if act == BASE_ID:
            return base_derivative_e1(x, self.params)
        return slowdown_derivative_e1(self.slowdowns[act], x, self.params)

    def evaluate_brute(self, x) -> tuple[float, int]:
        """Grid-free reference fold over every constraint (test oracle)."""
        params = self.params
        best = tau_n(max_norm(x), params)
        act = BASE_ID
        for j, sd in enumerate(self.slowdowns):
            v = slowdown_value(sd, x, params)
            if v < best:
                best = v
                act = j
        return best, act
