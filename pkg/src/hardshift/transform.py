"""The shift transformation: construction, application, densities, inverse.

The forward construction enumerates interior particles by repeatedly taking
the minimum of the current shift profile, then capping the profile with the
slow-down constraint of the selected particle.  Shifting every particle
right by its recorded amount preserves the hard core; shifting left gives
the mirror transformation.  The inverse reconstructs the enumeration from a
transformed configuration by minimizing the profile composed with the
inverse of the partial shear maps, which is solved pointwise by bisection.

The heap-based construction is served by the active backend (compiled or
pure Python); the quadratic reference construction used as an oracle lives
here and goes through ``ShiftProfileState`` directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .config import Configuration, check_hard_core
from .params import ModelParams
from .profile import (BASE_ID, ShiftProfileState, base_derivative_e1,
                      make_slowdown, slowdown_derivative_e1)

BOUNDARY_STEP = 0  # active id of the step-0 boundary constraint


@dataclass(frozen=True)
class TransformTrace:
    """Record of one forward construction.

    ``order[k]`` is the interior index selected at step k+1, ``shifts[k]``
    its shift amount, ``active[k]`` the attaining constraint (-1 base
    profile, 0 boundary, l >= 1 the constraint from step l), ``derivs[k]``
    the e1 derivative of that constraint at the selected particle, and
    ``m_prime`` the first step where the proviso flattened a constraint
    (m+1 if never).  ``phi``/``phi_bar`` are the products of |1 +- deriv|.
    """

    order: np.ndarray
    shifts: np.ndarray
    active: np.ndarray
    derivs: np.ndarray
    m_prime: int
    phi: float
    phi_bar: float

    @property
    def size(self) -> int:
        return self.order.shape[0]

    def shift_by_particle(self) -> np.ndarray:
        """Shift amounts indexed like ``cfg.interior``."""
        out = np.empty(self.size, dtype=np.float64)
        out[self.order] = self.shifts
        return out


def _finish_trace(order, taus, active, derivs, m_prime) -> TransformTrace:
    phi = 1.0
    phi_bar = 1.0
    for d in derivs.tolist():
        phi *= abs(1.0 + d)
        phi_bar *= abs(1.0 - d)
    return TransformTrace(order=order, shifts=taus, active=active,
                          derivs=derivs, m_prime=int(m_prime),
                          phi=phi, phi_bar=phi_bar)


def build_forward(cfg: Configuration, params: ModelParams,
                  method: str = "heap", check: bool = True) -> TransformTrace:
    """Construct the transformation trace for ``cfg``.

    ``method`` is "heap" (backend kernel, near-linear) or "naive" (the
    quadratic reference).  Both produce bit-identical traces.  ``check``
    validates the hard core first and rejects invalid input.
    """
    if check:
        bad = check_hard_core(cfg)
        if bad:
            raise ValueError(f"input violates the hard core: pairs {bad[:3]}...")
    if params.n != cfg.n:
        raise ValueError(f"params n={params.n} does not match configuration n={cfg.n}")
    if method == "heap":
        kern = get_kernels()
        order, taus, active, derivs, m_prime = kern.forward_heap(
            cfg.interior, cfg.boundary, params)
        return _finish_trace(order, taus, active, derivs, m_prime)
    if method == "naive":
        return _build_forward_naive(cfg, params)
    raise ValueError(f"unknown method {method!r}")


def _build_forward_naive(cfg: Configuration, params: ModelParams) -> TransformTrace:
    """Reference construction: full envelope re-evaluation each step."""
    interior = cfg.interior
    m = interior.shape[0]
    state = ShiftProfileState(params)
    state.add_boundary(cfg.boundary)
    nb = state.boundary_count

    order = np.empty(m, dtype=np.int64)
    taus = np.empty(m, dtype=np.float64)
    active = np.empty(m, dtype=np.int64)
    derivs = np.empty(m, dtype=np.float64)
    m_prime = 0 if make_slowdown((params.n, 0.0), 0.0, params).flattened else -1

    remaining = list(range(m))
    for k in range(1, m + 1):
        best_key = None
        best_act = BASE_ID
        best_i = -1
        for i in remaining:
            v, a = state.envelope_eval(interior[i])
            key = (v, interior[i, 0], interior[i, 1])
            if best_key is None or key < best_key:
                best_key = key
                best_act = a
                best_i = i
        v = best_key[0]
        i = best_i
        remaining.remove(i)
        order[k - 1] = i
        taus[k - 1] = v
        if best_act == BASE_ID:
            active[k - 1] = -1
            derivs[k - 1] = base_derivative_e1(interior[i], params)
        else:
            sd = state.slowdowns[best_act]
            active[k - 1] = BOUNDARY_STEP if best_act < nb else best_act - nb + 1
            derivs[k - 1] = slowdown_derivative_e1(sd, interior[i], params)
        sd = make_slowdown(interior[i], v, params)
        if sd.flattened and m_prime < 0:
            m_prime = k
        state.add_slowdown(sd)

    return _finish_trace(order, taus, active, derivs,
                         m_prime if m_prime >= 0 else m + 1)


def profile_state_from_trace(cfg: Configuration, params: ModelParams,
                             trace: TransformTrace, upto: int | None = None) -> ShiftProfileState:
    """Rebuild the shift profile after ``upto`` construction steps.

    ``upto=None`` gives the final profile (all constraints).  Constraint
    data is recomputed deterministically from the trace.
    """
    state = ShiftProfileState(params)
    state.add_boundary(cfg.boundary)
    steps = trace.size if upto is None else upto
    for k in range(steps):
        state.add_slowdown(make_slowdown(cfg.interior[trace.order[k]],
                                         trace.shifts[k], params))
    return state


def apply_shift(cfg: Configuration, trace: TransformTrace, direction: int) -> Configuration:
    """Shift interior particles horizontally by their recorded amounts.

    ``direction`` +1 is the transformation itself, -1 the mirror
    transformation (same amounts, opposite direction).  Boundary particles
    are returned bit-identical.
    """
    if direction not in (+1, -1):
        raise ValueError("direction must be +1 or -1")
    interior = cfg.interior.copy()
    interior[trace.order, 0] += direction * trace.shifts
    return Configuration(n=cfg.n, interior=interior, boundary=cfg.boundary)


def build_inverse(cfg: Configuration, params: ModelParams):
    """Run the inverse construction on a (transformed) configuration.

    Returns ``(original, order, taus)``: the reconstructed configuration,
    the reconstruction order (indices into ``cfg.interior``), and the
    recovered shift amounts.
    """
    if params.n != cfg.n:
        raise ValueError(f"params n={params.n} does not match configuration n={cfg.n}")
    kern = get_kernels()
    order, taus, pre = kern.inverse_build(cfg.interior, cfg.boundary, params)
    original = Configuration(n=cfg.n, interior=pre, boundary=cfg.boundary)
    return original, order, taus


def invert(cfg: Configuration, params: ModelParams) -> Configuration:
    """Inverse transformation: reconstruct the original configuration."""
    original, _, _ = build_inverse(cfg, params)
    return original


def solve_shear_inverse(state: ShiftProfileState, target) -> tuple[float, float]:
    """Point ``y`` on the same horizontal line with ``y + t(y) e1 = target``.

    The map ``s -> s + t((s, y2))`` has slope in [1-delta, 1+delta], so the
    solution is found by bisection on ``[target.x - t_max, target.x]``;
    the residual after convergence is below 1e-12.
    """
    x0 = float(target[0])
    yy = float(target[1])
    a = x0 - state.params.target_shift
    b = x0
    it = 0
    while b - a > 1e-13:
        mid = 0.5 * (a + b)
        if mid + state.value_at((mid, yy)) - x0 < 0.0:
            a = mid
        else:
            b = mid
        it += 1
        if it > 200:
            raise RuntimeError("shear inversion did not converge")
    return (0.5 * (a + b), yy)


@dataclass(frozen=True)
class InfluenceChain:
    """Back-tracked constraint chain for one particle.

    ``chain`` lists construction steps from the particle's own step back to
    the root; ``root`` is "self" (base profile directly), "interior"
    (chain ends at a particle whose constraint was the base profile), or
    "boundary".  ``ancestor`` is the interior index of the chain's last
    particle (the particle itself for "self", irrelevant for "boundary").
    """

    step: int
    chain: list[int]
    root: str
    ancestor: int


def influence_chains(trace: TransformTrace) -> list[InfluenceChain]:
    """Follow recorded active constraints back to their roots."""
    out = []
    for k in range(1, trace.size + 1):
        chain = [k]
        cur = k
        while True:
            a = int(trace.active[cur - 1])
            if a == -1:
                root = "self" if cur == k else "interior"
                ancestor = int(trace.order[cur - 1])
                break
            if a == BOUNDARY_STEP:
                root = "boundary"
                ancestor = -1
                break
            cur = a
            chain.append(cur)
        out.append(InfluenceChain(step=k, chain=chain, root=root, ancestor=ancestor))
    return out


def density(trace: TransformTrace, direction: int) -> float:
    """Jacobian-type density of the transformation (+1) or its mirror (-1)."""
    if direction == +1:
        return trace.phi
    if direction == -1:
        return trace.phi_bar
    raise ValueError("direction must be +1 or -1")


def log_phi_phibar(trace: TransformTrace) -> float:
    """log(phi * phi_bar) summed stably as sum of log1p(-deriv^2)."""
    d = trace.derivs
    return float(np.sum(np.log1p(-d * d)))


def trace_to_jsonl(cfg: Configuration, trace: TransformTrace) -> str:
    """One record per construction step: {k, P, tau, active, deriv}."""
    lines = []
    for k in range(trace.size):
        i = int(trace.order[k])
        lines.append(json.dumps({
            "k": k + 1,
            "P": [float(cfg.interior[i, 0]), float(cfg.interior[i, 1])],
            "tau": float(trace.shifts[k]),
            "active": int(trace.active[k]),
            "deriv": float(trace.derivs[k]),
        }))
    return "\n".join(lines) + ("\n" if lines else "")
