"""Pure-Python kernels: MCMC moves and the recursive shift construction.

These are the fallback implementations selected when the compiled extension
is unavailable (or forced via ``HARDSHIFT_FORCE_FALLBACK=1``).  Every
floating-point expression is written in the same shape and order as in the
compiled kernels, so both backends produce bit-identical trajectories,
traces, and inverses.

Conventions shared by both backends:

* active-constraint encoding during construction: ``-1`` base profile,
  ``-(2+b)`` boundary constraint ``b``, ``l >= 1`` constraint from step l;
  exported traces map boundary constraints to step index 0.
* heap keys are ``(value, x, y)`` with exact float comparison; stale heap
  entries are discarded when their value no longer matches the current
  per-particle value (values only decrease).
* MCMC consumes exactly 4 uniforms per step regardless of the move type,
  so trajectories depend only on the seed, not on the backend.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

COMPILED = False


# ---------------------------------------------------------------------------
# grand-canonical MCMC
# ---------------------------------------------------------------------------

def _grid_key(x: float, y: float) -> tuple[int, int]:
    return (math.floor(x), math.floor(y))


def _has_neighbor_within_one(buckets, pts, x, y, skip=-1) -> bool:
    cx = math.floor(x)
    cy = math.floor(y)
    for ix in (cx - 1, cx, cx + 1):
        for iy in (cy - 1, cy, cy + 1):
            for j in buckets.get((ix, iy), ()):
                if j == skip:
                    continue
                dx = pts[j, 0] - x
                dy = pts[j, 1] - y
                if dx * dx + dy * dy <= 1.0:
                    return True
    return False


def run_steps(pos: np.ndarray, count: int, n_box: float, z: float,
              bnd: np.ndarray, n_steps: int, rng, stats: np.ndarray) -> int:
    """Run ``n_steps`` elementary moves of the insert/delete/translate chain.

    ``pos`` is a preallocated (capacity, 2) array holding ``count`` active
    particles; the new count is returned.  ``bnd`` must already be clipped
    to max norm <= n_box + 1 (farther boundary particles cannot collide).
    ``stats`` accumulates [ins_prop, ins_acc, del_prop, del_acc, tr_prop,
    tr_acc].  Each step consumes exactly 4 uniforms from one block drawn
    up front, so trajectories are reproducible across backends.
    """
    zA = z * ((2.0 * n_box) * (2.0 * n_box))
    igrid: dict[tuple[int, int], list[int]] = {}
    for i in range(count):
        igrid.setdefault(_grid_key(pos[i, 0], pos[i, 1]), []).append(i)
    bgrid: dict[tuple[int, int], list[int]] = {}
    for i in range(bnd.shape[0]):
        bgrid.setdefault(_grid_key(bnd[i, 0], bnd[i, 1]), []).append(i)

    u = rng.random(4 * n_steps)
    for s in range(n_steps):
        u0 = u[4 * s]
        u1 = u[4 * s + 1]
        u2 = u[4 * s + 2]
        u3 = u[4 * s + 3]
        if u0 < 0.25:
            # insertion
            stats[0] += 1
            px = -n_box + 2.0 * n_box * u1
            py = -n_box + 2.0 * n_box * u2
            if _has_neighbor_within_one(igrid, pos, px, py):
                continue
            if _has_neighbor_within_one(bgrid, bnd, px, py):
                continue
            if u3 * (count + 1.0) < zA:
                pos[count, 0] = px
                pos[count, 1] = py
                igrid.setdefault(_grid_key(px, py), []).append(count)
                count += 1
                stats[1] += 1
        elif u0 < 0.5:
            # deletion
            stats[2] += 1
            if count == 0:
                continue
            idx = int(u1 * count)
            if u3 * zA < count:
                igrid[_grid_key(pos[idx, 0], pos[idx, 1])].remove(idx)
                last = count - 1
                if idx != last:
                    key = _grid_key(pos[last, 0], pos[last, 1])
                    igrid[key].remove(last)
                    igrid[key].append(idx)
                    pos[idx, 0] = pos[last, 0]
                    pos[idx, 1] = pos[last, 1]
                count = last
                stats[3] += 1
        else:
            # translation
            stats[4] += 1
            if count == 0:
                continue
            idx = int(u1 * count)
            nx = pos[idx, 0] + 0.4 * (u2 - 0.5)
            ny = pos[idx, 1] + 0.4 * (u3 - 0.5)
            if abs(nx) > n_box or abs(ny) > n_box:
                continue
            if _has_neighbor_within_one(igrid, pos, nx, ny, skip=idx):
                continue
            if _has_neighbor_within_one(bgrid, bnd, nx, ny):
                continue
            old = _grid_key(pos[idx, 0], pos[idx, 1])
            new = _grid_key(nx, ny)
            if old != new:
                igrid[old].remove(idx)
                igrid.setdefault(new, []).append(idx)
            pos[idx, 0] = nx
            pos[idx, 1] = ny
            stats[5] += 1

    return count


# ---------------------------------------------------------------------------
# forward construction
# ---------------------------------------------------------------------------

def forward_heap(interior: np.ndarray, boundary: np.ndarray, params):
    """Heap-based recursive construction of the shift transformation.

    Returns ``(order, taus, active, derivs, m_prime)`` where ``order`` lists
    interior indices in construction order, ``taus`` the shift amounts,
    ``active`` the attaining constraint per step (-1 base, 0 boundary,
    l >= 1 step), ``derivs`` the e1 derivative of the active constraint at
    the selected particle, and ``m_prime`` the first step whose constraint
    was flattened by the proviso (m+1 if none).
    """
    n = float(params.n)
    eps = params.epsilon
    one_plus_eps = params.one_plus_eps
    delta_eps = params.delta_eps
    flat_value = params.target_shift
    mid_coef = params.mid_coef
    log_n = params.log_n
    n23 = params.n_two_thirds
    m = interior.shape[0]

    def tau(s):
        if s <= n23:
            return flat_value
        if s >= n:
            return 0.0
        return mid_coef * (log_n - math.log(s))

    order = np.empty(m, dtype=np.int64)
    taus = np.empty(m, dtype=np.float64)
    active = np.empty(m, dtype=np.int64)
    derivs = np.empty(m, dtype=np.float64)

    # step-0 convention point has max norm n; m' = 0 would need its height
    # above the proviso threshold (never happens for n >= 8)
    m_prime = 0 if tau(n - 1.0 - eps) > delta_eps else -1

    if m == 0:
        return order, taus, active, derivs, (m_prime if m_prime >= 0 else m + 1)

    # interior cell grid for (1+eps)-range updates
    cell = one_plus_eps
    buckets: dict[tuple[int, int], list[int]] = {}
    for i in range(m):
        key = (math.floor(interior[i, 0] / cell), math.floor(interior[i, 1] / cell))
        buckets.setdefault(key, []).append(i)

    def near(x, y):
        cx = math.floor(x / cell)
        cy = math.floor(y / cell)
        out = []
        for ix in (cx - 1, cx, cx + 1):
            for iy in (cy - 1, cy, cy + 1):
                out.extend(buckets.get((ix, iy), ()))
        return out

    best = np.empty(m, dtype=np.float64)
    act = np.empty(m, dtype=np.int64)
    for i in range(m):
        best[i] = tau(max(abs(interior[i, 0]), abs(interior[i, 1])))
        act[i] = -1

    # boundary constraints (shift 0), clipped to the influence band
    reach = n + one_plus_eps
    bcx: list[float] = []
    bcy: list[float] = []
    bh: list[float] = []
    for j in range(boundary.shape[0]):
        x = boundary[j, 0]
        y = boundary[j, 1]
        if max(abs(x), abs(y)) <= reach:
            b = len(bcx)
            h = abs(tau(max(abs(x), abs(y)) - 1.0 - eps) - 0.0)
            bcx.append(x)
            bcy.append(y)
            bh.append(h)
            if h > delta_eps:
                # flattened boundary constraint: global cap at 0
                for i in range(m):
                    if 0.0 < best[i]:
                        best[i] = 0.0
                        act[i] = -(2 + b)
            else:
                for i in near(x, y):
                    dx = interior[i, 0] - x
                    dy = interior[i, 1] - y
                    d = math.sqrt(dx * dx + dy * dy)
                    if d > one_plus_eps:
                        continue
                    if d <= 1.0:
                        cand = 0.0
                    else:
                        cand = 0.0 + h / eps * (d - 1.0)
                    if cand < best[i]:
                        best[i] = cand
                        act[i] = -(2 + b)

    heap = [(best[i], interior[i, 0], interior[i, 1], i) for i in range(m)]
    heapq.heapify(heap)
    chosen = np.zeros(m, dtype=bool)

    # per-step constraint data (index l from 1)
    sd_x = [0.0]
    sd_y = [0.0]
    sd_base = [0.0]
    sd_h = [0.0]
    sd_flat = [False]

    for k in range(1, m + 1):
        while True:
            v, x, y, i = heapq.heappop(heap)
            if not chosen[i] and v == best[i]:
                break
        chosen[i] = True
        order[k - 1] = i
        taus[k - 1] = v
        a = act[i]
        if a == -1:
            active[k - 1] = -1
            # base-profile branch derivative
            s = max(abs(x), abs(y))
            if s <= n23 or s >= n:
                dv = 0.0
            elif abs(x) >= abs(y):
                dv = -mid_coef / s if x > 0.0 else mid_coef / s
            else:
                dv = 0.0
        elif a <= -2:
            active[k - 1] = 0
            b = -2 - a
            dx = x - bcx[b]
            dy = y - bcy[b]
            d = math.sqrt(dx * dx + dy * dy)
            if 1.0 < d < one_plus_eps:
                dv = bh[b] / eps * dx / d
            else:
                dv = 0.0
        else:
            active[k - 1] = a
            if sd_flat[a]:
                dv = 0.0
            else:
                dx = x - sd_x[a]
                dy = y - sd_y[a]
                d = math.sqrt(dx * dx + dy * dy)
                if 1.0 < d < one_plus_eps:
                    dv = sd_h[a] / eps * dx / d
                else:
                    dv = 0.0
        derivs[k - 1] = dv

        h = abs(tau(max(abs(x), abs(y)) - 1.0 - eps) - v)
        flat = h > delta_eps
        if flat and m_prime < 0:
            m_prime = k
        sd_x.append(x)
        sd_y.append(y)
        sd_base.append(v)
        sd_h.append(h)
        sd_flat.append(flat)

        if k == m:
            break
        if flat:
            for i2 in range(m):
                if not chosen[i2] and v < best[i2]:
                    best[i2] = v
                    act[i2] = k
                    heapq.heappush(heap, (v, interior[i2, 0], interior[i2, 1], i2))
        else:
            for i2 in near(x, y):
                if chosen[i2]:
                    continue
                dx = interior[i2, 0] - x
                dy = interior[i2, 1] - y
                d = math.sqrt(dx * dx + dy * dy)
                if d > one_plus_eps:
                    continue
                if d <= 1.0:
                    cand = v
                else:
                    cand = v + h / eps * (d - 1.0)
                if cand < best[i2]:
                    best[i2] = cand
                    act[i2] = k
                    heapq.heappush(heap, (cand, interior[i2, 0], interior[i2, 1], i2))

    return order, taus, active, derivs, (m_prime if m_prime >= 0 else m + 1)


# ---------------------------------------------------------------------------
# inverse construction
# ---------------------------------------------------------------------------

def inverse_build(tilde: np.ndarray, boundary: np.ndarray, params):
    """Reconstruct originals from a transformed configuration.

    Returns ``(order, taus, pre)`` where ``order`` lists indices of the
    transformed interior in reconstruction order, ``taus`` the recovered
    shift amounts, and ``pre`` the (m, 2) original positions.
    """
    n = float(params.n)
    eps = params.epsilon
    one_plus_eps = params.one_plus_eps
    delta_eps = params.delta_eps
    flat_value = params.target_shift
    mid_coef = params.mid_coef
    log_n = params.log_n
    n23 = params.n_two_thirds
    m = tilde.shape[0]

    def tau(s):
        if s <= n23:
            return flat_value
        if s >= n:
            return 0.0
        return mid_coef * (log_n - math.log(s))

    # envelope state: finite cones in a cell grid + global flat cap
    cell = one_plus_eps
    sgrid: dict[tuple[int, int], list[int]] = {}
    scx: list[float] = []
    scy: list[float] = []
    sbase: list[float] = []
    sh: list[float] = []
    cap = math.inf

    def add_cone(x, y, base, h):
        j = len(scx)
        scx.append(x)
        scy.append(y)
        sbase.append(base)
        sh.append(h)
        sgrid.setdefault((math.floor(x / cell), math.floor(y / cell)), []).append(j)

    reach = n + one_plus_eps
    for j in range(boundary.shape[0]):
        x = boundary[j, 0]
        y = boundary[j, 1]
        if max(abs(x), abs(y)) <= reach:
            h = abs(tau(max(abs(x), abs(y)) - 1.0 - eps) - 0.0)
            if h > delta_eps:
                if 0.0 < cap:
                    cap = 0.0
            else:
                add_cone(x, y, 0.0, h)

    def eval_t(x, y):
        v = tau(max(abs(x), abs(y)))
        if cap < v:
            v = cap
        cx = math.floor(x / cell)
        cy = math.floor(y / cell)
        for ix in (cx - 1, cx, cx + 1):
            for iy in (cy - 1, cy, cy + 1):
                for j in sgrid.get((ix, iy), ()):
                    dx = x - scx[j]
                    dy = y - scy[j]
                    d = math.sqrt(dx * dx + dy * dy)
                    if d > one_plus_eps:
                        continue
                    if d <= 1.0:
                        c = sbase[j]
                    else:
                        c = sbase[j] + sh[j] / eps * (d - 1.0)
                    if c < v:
                        v = c
        return v

    def solve_shift(x0, yy):
        # shift amount at the preimage on the horizontal line: the root of
        # y + t(y) = x0 is bracketed by bisection (slope in [1-d, 1+d]),
        # then t is evaluated at the approximate root.  Where t is locally
        # flat (the only place exact value ties occur) this returns the
        # exact constant, so tie-breaking matches the forward construction.
        a = x0 - flat_value
        b = x0
        it = 0
        while b - a > 1e-13:
            mid = 0.5 * (a + b)
            if mid + eval_t(mid, yy) - x0 < 0.0:
                a = mid
            else:
                b = mid
            it += 1
            if it > 200:
                raise RuntimeError("shear inversion did not converge")
        return eval_t(0.5 * (a + b), yy)

    order = np.empty(m, dtype=np.int64)
    taus = np.empty(m, dtype=np.float64)
    pre = np.empty((m, 2), dtype=np.float64)
    if m == 0:
        return order, taus, pre

    best = np.empty(m, dtype=np.float64)
    py = np.empty(m, dtype=np.float64)
    # cached-preimage grid; cells sized to cover the support of a new cone
    # plus the maximal preimage staleness (total shift decrease <= flat_value)
    rcell = one_plus_eps + flat_value
    cgrid: dict[tuple[int, int], list[int]] = {}

    def ckey(x, y):
        return (math.floor(x / rcell), math.floor(y / rcell))

    for i in range(m):
        g0 = solve_shift(tilde[i, 0], tilde[i, 1])
        best[i] = g0
        py[i] = tilde[i, 0] - g0
        cgrid.setdefault(ckey(py[i], tilde[i, 1]), []).append(i)

    heap = [(best[i], tilde[i, 0], tilde[i, 1], i) for i in range(m)]
    heapq.heapify(heap)
    chosen = np.zeros(m, dtype=bool)

    def cache_move(i, old_y1, new_y1):
        ko = ckey(old_y1, tilde[i, 1])
        kn = ckey(new_y1, tilde[i, 1])
        if ko != kn:
            cgrid[ko].remove(i)
            cgrid.setdefault(kn, []).append(i)
        py[i] = new_y1

    for k in range(1, m + 1):
        while True:
            g, x, y, i = heapq.heappop(heap)
            if not chosen[i] and g == best[i]:
                break
        chosen[i] = True
        order[k - 1] = i
        taus[k - 1] = g
        cx0 = py[i]
        pre[i, 0] = cx0
        pre[i, 1] = y

        h = abs(tau(max(abs(cx0), abs(y)) - 1.0 - eps) - g)
        if h > delta_eps:
            if g < cap:
                cap = g
            for i2 in range(m):
                if not chosen[i2] and g < best[i2]:
                    best[i2] = g
                    y1 = tilde[i2, 0] - g
                    cache_move(i2, py[i2], y1)
                    heapq.heappush(heap, (g, tilde[i2, 0], tilde[i2, 1], i2))
        else:
            add_cone(cx0, y, g, h)
            ccx = math.floor(cx0 / rcell)
            ccy = math.floor(y / rcell)
            for ix in (ccx - 1, ccx, ccx + 1):
                for iy in (ccy - 1, ccy, ccy + 1):
                    for i2 in list(cgrid.get((ix, iy), ())):
                        if chosen[i2]:
                            continue
                        g2 = solve_shift(tilde[i2, 0], tilde[i2, 1])
                        if g2 < best[i2]:
                            best[i2] = g2
                            cache_move(i2, py[i2], tilde[i2, 0] - g2)
                            heapq.heappush(heap, (g2, tilde[i2, 0], tilde[i2, 1], i2))

    return order, taus, pre
