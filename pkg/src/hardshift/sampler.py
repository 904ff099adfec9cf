"""Grand-canonical Markov chain Monte Carlo for the hard disk model.

The chain targets the finite-volume Gibbs distribution in the box given a
frozen boundary configuration: a Poisson point process of intensity z
conditioned on the hard core.  Moves are insertion (prob 1/4, uniform in
the box, accepted with min(1, zA/(N+1)) when no overlap), deletion (prob
1/4, accepted with min(1, N/(zA))), and translation (prob 1/2, uniform
displacement in a square of side 0.4, accepted when the hard core and the
box are respected).  Each move consumes exactly 4 uniforms so trajectories
are bit-reproducible across backends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import get_kernels
from .config import Configuration, check_hard_core
from .params import ModelParams

# maximal hard-core center density (hexagonal packing) with head room
_PACKING = 1.2


def chain_capacity(n: int) -> int:
    side = 2 * n + 2
    return int(_PACKING * side * side) + 64


def boundary_triangular(n: int, spacing: float) -> np.ndarray:
    """Triangular-lattice boundary clipped to the band n < max_norm <= n+2.

    Row height is spacing * sqrt(3)/2 with alternate rows offset by half a
    spacing.  Spacing must exceed 1 (the hard core).
    """
    if not (spacing > 1.0):
        raise ValueError(f"spacing must be > 1, got {spacing}")
    lim = n + 2.0
    row_h = spacing * math.sqrt(3.0) / 2.0
    jmax = math.ceil(lim / row_h)
    imax = math.ceil((lim + spacing) / spacing)
    pts = []
    for j in range(-jmax, jmax + 1):
        y = j * row_h
        off = 0.5 * spacing if j % 2 else 0.0
        for i in range(-imax, imax + 1):
            x = i * spacing + off
            if n < max(abs(x), abs(y)) <= n + 2.0:
                pts.append((x, y))
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


@dataclass
class ChainState:
    """Mutable state of one MCMC chain."""

    params: ModelParams
    boundary: np.ndarray              # full boundary set (outside the box)
    seed: int
    pos: np.ndarray = field(repr=False, default=None)
    count: int = 0
    sweep_count: int = 0
    rng: np.random.Generator = field(repr=False, default=None)
    # [ins_prop, ins_acc, del_prop, del_acc, tr_prop, tr_acc]
    stats: np.ndarray = None
    _bnd_near: np.ndarray = field(repr=False, default=None)

    def configuration(self) -> Configuration:
        return Configuration(n=self.params.n, interior=self.pos[:self.count].copy(),
                             boundary=self.boundary)

    @property
    def acceptance(self) -> dict:
        s = self.stats
        return {
            "insert": (int(s[1]), int(s[0])),
            "delete": (int(s[3]), int(s[2])),
            "translate": (int(s[5]), int(s[4])),
        }


def make_chain(params: ModelParams, boundary, seed: int,
               start: Configuration | None = None) -> ChainState:
    """Initialize a chain (empty interior unless ``start`` is given)."""
    boundary = np.asarray(boundary, dtype=np.float64).reshape(-1, 2)
    probe = Configuration(n=params.n, interior=np.empty((0, 2)), boundary=boundary)
    if check_hard_core(probe):
        raise ValueError("boundary configuration violates the hard core")
    state = ChainState(params=params, boundary=boundary, seed=int(seed))
    state.pos = np.empty((chain_capacity(params.n), 2), dtype=np.float64)
    state.rng = np.random.Generator(np.random.PCG64(int(seed)))
    state.stats = np.zeros(6, dtype=np.int64)
    near = boundary[np.max(np.abs(boundary), axis=1) <= params.n + 1.0] \
        if boundary.size else boundary
    state._bnd_near = np.ascontiguousarray(near)
    if start is not None:
        if start.n != params.n:
            raise ValueError("start configuration has mismatched n")
        state.count = start.count
        state.pos[:state.count] = start.interior
    return state


def run_chain_steps(state: ChainState, n_steps: int) -> None:
    """Advance the chain by exactly ``n_steps`` elementary moves."""
    if n_steps <= 0:
        return
    kern = get_kernels()
    state.count = kern.run_steps(state.pos, state.count, float(state.params.n),
                                 state.params.z, state._bnd_near,
                                 int(n_steps), state.rng, state.stats)


def run_chain_sweeps(state: ChainState, n_sweeps: int,
                     sweep_steps: int | None = None) -> None:
    """Advance the chain by whole sweeps (one sweep = max(N, 1) steps).

    By default the sweep length tracks the current particle count, which is
    the right thing for equilibration.  For stationary sampling pass a
    frozen ``sweep_steps``: taking samples at state-dependent step counts
    would bias the sampled marginal (the sweep-boundary chain is then a
    state-dependent power of the kernel, whose stationary law differs from
    the target).
    """
    for _ in range(int(n_sweeps)):
        steps = sweep_steps if sweep_steps is not None else max(state.count, 1)
        run_chain_steps(state, steps)
        state.sweep_count += 1


def mcmc_step(state: ChainState, params: ModelParams | None = None) -> ChainState:
    """One elementary move, mutating ``state`` in place.

    Uses brute-force overlap checks; consumes the same 4-uniform block as
    the sweep kernels, so max(N,1) consecutive calls replicate one kernel
    sweep exactly.
    """
    p = params or state.params
    n_box = float(p.n)
    zA = p.z * ((2.0 * n_box) * (2.0 * n_box))
    pos, count, bnd = state.pos, state.count, state._bnd_near
    u0, u1, u2, u3 = state.rng.random(4)

    def overlaps(x, y, skip=-1):
        for j in range(count):
            if j == skip:
                continue
            dx = pos[j, 0] - x
            dy = pos[j, 1] - y
            if dx * dx + dy * dy <= 1.0:
                return True
        for j in range(bnd.shape[0]):
            dx = bnd[j, 0] - x
            dy = bnd[j, 1] - y
            if dx * dx + dy * dy <= 1.0:
                return True
        return False

    if u0 < 0.25:
        state.stats[0] += 1
        px = -n_box + 2.0 * n_box * u1
        py = -n_box + 2.0 * n_box * u2
        if not overlaps(px, py) and u3 * (count + 1.0) < zA:
            pos[count, 0] = px
            pos[count, 1] = py
            state.count += 1
            state.stats[1] += 1
    elif u0 < 0.5:
        state.stats[2] += 1
        if count:
            idx = int(u1 * count)
            if u3 * zA < count:
                last = count - 1
                if idx != last:
                    pos[idx, 0] = pos[last, 0]
                    pos[idx, 1] = pos[last, 1]
                state.count = last
                state.stats[3] += 1
    else:
        state.stats[4] += 1
        if count:
            idx = int(u1 * count)
            nx = pos[idx, 0] + 0.4 * (u2 - 0.5)
            ny = pos[idx, 1] + 0.4 * (u3 - 0.5)
            if abs(nx) <= n_box and abs(ny) <= n_box and not overlaps(nx, ny, skip=idx):
                pos[idx, 0] = nx
                pos[idx, 1] = ny
                state.stats[5] += 1
    return state


def sample_stream(params: ModelParams, boundary, burn_in_sweeps: int,
                  n_samples: int, thin_sweeps: int, seed: int,
                  start: Configuration | None = None):
    """Yield equilibrated configurations one at a time (memory-flat).

    Burn-in uses count-adapted sweeps; once sampling starts, the sweep
    length is frozen at max(N, 1) so that the number of steps between
    samples no longer depends on the trajectory (unbiased sampling times).
    """
    if min(burn_in_sweeps, n_samples, thin_sweeps) < 0:
        raise ValueError("sweep counts must be >= 0")
    state = make_chain(params, boundary, seed, start=start)
    run_chain_sweeps(state, burn_in_sweeps)
    frozen = max(state.count, 1)
    for _ in range(n_samples):
        run_chain_sweeps(state, thin_sweeps, sweep_steps=frozen)
        yield state.configuration()


def sample(params: ModelParams, boundary, burn_in_sweeps: int, n_samples: int,
           thin_sweeps: int, seed: int) -> list[Configuration]:
    """Collect ``n_samples`` configurations (see ``sample_stream``)."""
    return list(sample_stream(params, boundary, burn_in_sweeps, n_samples,
                              thin_sweeps, seed))


def derive_chain_seed(master_seed: int, chain_index: int) -> int:
    """Documented seed splitting: splitmix64 of (seed XOR mixed index)."""

    def splitmix64(v: int) -> int:
        v = (v + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        return v ^ (v >> 31)

    return splitmix64((master_seed & 0xFFFFFFFFFFFFFFFF) ^ splitmix64(chain_index + 1))
