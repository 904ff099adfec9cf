# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: MCMC moves, forward and inverse shift construction.

Mirrors ``hardshift._fallback`` expression for expression; compiled with
-ffp-contract=off so results are bit-identical to the pure Python backend.
"""

import numpy as np

from libc.math cimport fabs, floor, log, sqrt

COMPILED = True


# ---------------------------------------------------------------------------
# grand-canonical MCMC
# ---------------------------------------------------------------------------

cdef inline long _cell1(double v) noexcept:
    return <long>floor(v)


def run_steps(double[:, ::1] pos, long count, double n_box, double z,
              const double[:, ::1] bnd, long n_steps, rng, long[::1] stats):
    """Backend twin of ``_fallback.run_steps`` (see there for semantics)."""
    cdef double zA = z * ((2.0 * n_box) * (2.0 * n_box))
    cdef long cap = pos.shape[0]
    cdef long nb = bnd.shape[0]

    # interior grid: doubly-linked lists per unit cell
    cdef long ioff = <long>floor(n_box) + 2
    cdef long idim = 2 * ioff + 2
    ghead_a = np.full(idim * idim, -1, dtype=np.int64)
    gnext_a = np.full(cap, -1, dtype=np.int64)
    gprev_a = np.full(cap, -1, dtype=np.int64)
    gcell_a = np.full(cap, -1, dtype=np.int64)
    cdef long[::1] ghead = ghead_a
    cdef long[::1] gnext = gnext_a
    cdef long[::1] gprev = gprev_a
    cdef long[::1] gcell = gcell_a

    # boundary grid: CSR over unit cells (boundary pre-clipped to n_box + 1)
    cdef long boff = <long>floor(n_box) + 3
    cdef long bdim = 2 * boff + 2
    bstart_a = np.zeros(bdim * bdim + 1, dtype=np.int64)
    bitems_a = np.empty(nb, dtype=np.int64)
    cdef long[::1] bstart = bstart_a
    cdef long[::1] bitems = bitems_a
    cdef long i, j, ci, s_, k
    for i in range(nb):
        ci = (_cell1(bnd[i, 0]) + boff) * bdim + (_cell1(bnd[i, 1]) + boff)
        bstart[ci + 1] += 1
    for i in range(bdim * bdim):
        bstart[i + 1] += bstart[i]
    fill_a = np.zeros(bdim * bdim, dtype=np.int64)
    cdef long[::1] fill = fill_a
    for i in range(nb):
        ci = (_cell1(bnd[i, 0]) + boff) * bdim + (_cell1(bnd[i, 1]) + boff)
        bitems[bstart[ci] + fill[ci]] = i
        fill[ci] += 1

    cdef long cx, cy, ix, iy, idx, last
    cdef double px, py, nx, ny, dx, dy, u0, u1, u2, u3
    cdef bint bad
    cdef double[::1] u

    for i in range(count):
        ci = (_cell1(pos[i, 0]) + ioff) * idim + (_cell1(pos[i, 1]) + ioff)
        gnext[i] = ghead[ci]
        gprev[i] = -1
        if ghead[ci] >= 0:
            gprev[ghead[ci]] = i
        ghead[ci] = i
        gcell[i] = ci

    u = rng.random(4 * n_steps)
    for s_ in range(n_steps):
        u0 = u[4 * s_]
        u1 = u[4 * s_ + 1]
        u2 = u[4 * s_ + 2]
        u3 = u[4 * s_ + 3]
        if u0 < 0.25:
            stats[0] += 1
            px = -n_box + 2.0 * n_box * u1
            py = -n_box + 2.0 * n_box * u2
            if _overlap_i(pos, ghead, gnext, ioff, idim, px, py, -1):
                continue
            if _overlap_b(bnd, bstart, bitems, boff, bdim, px, py):
                continue
            if u3 * (count + 1.0) < zA:
                if count >= cap:
                    raise RuntimeError("particle capacity exceeded")
                pos[count, 0] = px
                pos[count, 1] = py
                ci = (_cell1(px) + ioff) * idim + (_cell1(py) + ioff)
                gnext[count] = ghead[ci]
                gprev[count] = -1
                if ghead[ci] >= 0:
                    gprev[ghead[ci]] = count
                ghead[ci] = count
                gcell[count] = ci
                count += 1
                stats[1] += 1
        elif u0 < 0.5:
            stats[2] += 1
            if count == 0:
                continue
            idx = <long>(u1 * count)
            if u3 * zA < count:
                _unlink(ghead, gnext, gprev, gcell, idx)
                last = count - 1
                if idx != last:
                    _unlink(ghead, gnext, gprev, gcell, last)
                    pos[idx, 0] = pos[last, 0]
                    pos[idx, 1] = pos[last, 1]
                    ci = (_cell1(pos[idx, 0]) + ioff) * idim + (_cell1(pos[idx, 1]) + ioff)
                    gnext[idx] = ghead[ci]
                    gprev[idx] = -1
                    if ghead[ci] >= 0:
                        gprev[ghead[ci]] = idx
                    ghead[ci] = idx
                    gcell[idx] = ci
                count = last
                stats[3] += 1
        else:
            stats[4] += 1
            if count == 0:
                continue
            idx = <long>(u1 * count)
            nx = pos[idx, 0] + 0.4 * (u2 - 0.5)
            ny = pos[idx, 1] + 0.4 * (u3 - 0.5)
            if fabs(nx) > n_box or fabs(ny) > n_box:
                continue
            if _overlap_i(pos, ghead, gnext, ioff, idim, nx, ny, idx):
                continue
            if _overlap_b(bnd, bstart, bitems, boff, bdim, nx, ny):
                continue
            _unlink(ghead, gnext, gprev, gcell, idx)
            pos[idx, 0] = nx
            pos[idx, 1] = ny
            ci = (_cell1(nx) + ioff) * idim + (_cell1(ny) + ioff)
            gnext[idx] = ghead[ci]
            gprev[idx] = -1
            if ghead[ci] >= 0:
                gprev[ghead[ci]] = idx
            ghead[ci] = idx
            gcell[idx] = ci
            stats[5] += 1
    return count


cdef inline void _unlink(long[::1] ghead, long[::1] gnext, long[::1] gprev,
                         long[::1] gcell, long i) noexcept:
    if gprev[i] >= 0:
        gnext[gprev[i]] = gnext[i]
    else:
        ghead[gcell[i]] = gnext[i]
    if gnext[i] >= 0:
        gprev[gnext[i]] = gprev[i]


cdef inline bint _overlap_i(double[:, ::1] pts, long[::1] ghead, long[::1] gnext,
                            long off, long dim, double x, double y, long skip) noexcept:
    cdef long cx = _cell1(x) + off
    cdef long cy = _cell1(y) + off
    cdef long ix, iy, j
    cdef double dx, dy
    for ix in range(cx - 1, cx + 2):
        if ix < 0 or ix >= dim:
            continue
        for iy in range(cy - 1, cy + 2):
            if iy < 0 or iy >= dim:
                continue
            j = ghead[ix * dim + iy]
            while j >= 0:
                if j != skip:
                    dx = pts[j, 0] - x
                    dy = pts[j, 1] - y
                    if dx * dx + dy * dy <= 1.0:
                        return True
                j = gnext[j]
    return False


cdef inline bint _overlap_b(const double[:, ::1] pts, long[::1] bstart, long[::1] bitems,
                            long off, long dim, double x, double y) noexcept:
    cdef long cx = _cell1(x) + off
    cdef long cy = _cell1(y) + off
    cdef long ix, iy, t, j, ci
    cdef double dx, dy
    for ix in range(cx - 1, cx + 2):
        if ix < 0 or ix >= dim:
            continue
        for iy in range(cy - 1, cy + 2):
            if iy < 0 or iy >= dim:
                continue
            ci = ix * dim + iy
            for t in range(bstart[ci], bstart[ci + 1]):
                j = bitems[t]
                dx = pts[j, 0] - x
                dy = pts[j, 1] - y
                if dx * dx + dy * dy <= 1.0:
                    return True
    return False


# ---------------------------------------------------------------------------
# shared helpers for the construction kernels
# ---------------------------------------------------------------------------

cdef inline double _tau(double s, double n, double n23, double flat_value,
                        double mid_coef, double log_n) noexcept:
    if s <= n23:
        return flat_value
    if s >= n:
        return 0.0
    return mid_coef * (log_n - log(s))


cdef inline double _fmaxabs(double x, double y) noexcept:
    cdef double a = fabs(x)
    cdef double b = fabs(y)
    return a if a > b else b


cdef inline bint _key_lt(double v1, double x1, double y1,
                         double v2, double x2, double y2) noexcept:
    if v1 != v2:
        return v1 < v2
    if x1 != x2:
        return x1 < x2
    return y1 < y2


cdef inline void _heap_up(double[::1] hv, double[::1] hx, double[::1] hy,
                          long[::1] hi, long pos) noexcept:
    cdef double v = hv[pos], x = hx[pos], y = hy[pos]
    cdef long i = hi[pos], parent
    while pos > 0:
        parent = (pos - 1) >> 1
        if _key_lt(v, x, y, hv[parent], hx[parent], hy[parent]):
            hv[pos] = hv[parent]
            hx[pos] = hx[parent]
            hy[pos] = hy[parent]
            hi[pos] = hi[parent]
            pos = parent
        else:
            break
    hv[pos] = v
    hx[pos] = x
    hy[pos] = y
    hi[pos] = i


cdef inline void _heap_down(double[::1] hv, double[::1] hx, double[::1] hy,
                            long[::1] hi, long size, long pos) noexcept:
    cdef double v = hv[pos], x = hx[pos], y = hy[pos]
    cdef long i = hi[pos], child
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _key_lt(hv[child + 1], hx[child + 1], hy[child + 1],
                                        hv[child], hx[child], hy[child]):
            child += 1
        if _key_lt(hv[child], hx[child], hy[child], v, x, y):
            hv[pos] = hv[child]
            hx[pos] = hx[child]
            hy[pos] = hy[child]
            hi[pos] = hi[child]
            pos = child
        else:
            break
    hv[pos] = v
    hx[pos] = x
    hy[pos] = y
    hi[pos] = i


# ---------------------------------------------------------------------------
# forward construction
# ---------------------------------------------------------------------------

def forward_heap(const double[:, ::1] interior, const double[:, ::1] boundary, params):
    """Backend twin of ``_fallback.forward_heap`` (see there for semantics)."""
    cdef double n = params.n
    cdef double eps = params.epsilon
    cdef double one_plus_eps = params.one_plus_eps
    cdef double delta_eps = params.delta_eps
    cdef double flat_value = params.target_shift
    cdef double mid_coef = params.mid_coef
    cdef double log_n = params.log_n
    cdef double n23 = params.n_two_thirds
    cdef long m = interior.shape[0]

    order_a = np.empty(m, dtype=np.int64)
    taus_a = np.empty(m, dtype=np.float64)
    active_a = np.empty(m, dtype=np.int64)
    derivs_a = np.empty(m, dtype=np.float64)
    cdef long[::1] order = order_a
    cdef double[::1] taus = taus_a
    cdef long[::1] active = active_a
    cdef double[::1] derivs = derivs_a

    cdef long m_prime = -1
    if _tau(n - 1.0 - eps, n, n23, flat_value, mid_coef, log_n) > delta_eps:
        m_prime = 0

    if m == 0:
        return order_a, taus_a, active_a, derivs_a, (m_prime if m_prime >= 0 else m + 1)

    # static interior grid (CSR) with cell size 1+eps
    cdef double cell = one_plus_eps
    cdef long goff = <long>floor(n / cell) + 2
    cdef long gdim = 2 * goff + 2
    cdef long ncells = gdim * gdim
    gstart_a = np.zeros(ncells + 1, dtype=np.int64)
    gitems_a = np.empty(m, dtype=np.int64)
    cdef long[::1] gstart = gstart_a
    cdef long[::1] gitems = gitems_a
    cdef long i, ci
    for i in range(m):
        ci = (<long>floor(interior[i, 0] / cell) + goff) * gdim + (<long>floor(interior[i, 1] / cell) + goff)
        gstart[ci + 1] += 1
    for i in range(ncells):
        gstart[i + 1] += gstart[i]
    gfill_a = np.zeros(ncells, dtype=np.int64)
    cdef long[::1] gfill = gfill_a
    for i in range(m):
        ci = (<long>floor(interior[i, 0] / cell) + goff) * gdim + (<long>floor(interior[i, 1] / cell) + goff)
        gitems[gstart[ci] + gfill[ci]] = i
        gfill[ci] += 1

    best_a = np.empty(m, dtype=np.float64)
    act_a = np.empty(m, dtype=np.int64)
    chosen_a = np.zeros(m, dtype=np.int64)
    cdef double[::1] best = best_a
    cdef long[::1] act = act_a
    cdef long[::1] chosen = chosen_a
    for i in range(m):
        best[i] = _tau(_fmaxabs(interior[i, 0], interior[i, 1]), n, n23, flat_value, mid_coef, log_n)
        act[i] = -1

    # boundary constraints clipped to influence band
    cdef double reach = n + one_plus_eps
    cdef long nb_all = boundary.shape[0]
    bcx_a = np.empty(nb_all, dtype=np.float64)
    bcy_a = np.empty(nb_all, dtype=np.float64)
    bh_a = np.empty(nb_all, dtype=np.float64)
    cdef double[::1] bcx = bcx_a
    cdef double[::1] bcy = bcy_a
    cdef double[::1] bh = bh_a
    cdef long nb = 0
    cdef long b, j, t, cx, cy, ix, iy
    cdef double x, y, h, d, dx, dy, cand, v, s, dv
    for j in range(nb_all):
        x = boundary[j, 0]
        y = boundary[j, 1]
        if _fmaxabs(x, y) <= reach:
            b = nb
            h = fabs(_tau(_fmaxabs(x, y) - 1.0 - eps, n, n23, flat_value, mid_coef, log_n) - 0.0)
            bcx[b] = x
            bcy[b] = y
            bh[b] = h
            nb += 1
            if h > delta_eps:
                for i in range(m):
                    if 0.0 < best[i]:
                        best[i] = 0.0
                        act[i] = -(2 + b)
            else:
                cx = <long>floor(x / cell) + goff
                cy = <long>floor(y / cell) + goff
                for ix in range(cx - 1, cx + 2):
                    if ix < 0 or ix >= gdim:
                        continue
                    for iy in range(cy - 1, cy + 2):
                        if iy < 0 or iy >= gdim:
                            continue
                        ci = ix * gdim + iy
                        for t in range(gstart[ci], gstart[ci + 1]):
                            i = gitems[t]
                            dx = interior[i, 0] - x
                            dy = interior[i, 1] - y
                            d = sqrt(dx * dx + dy * dy)
                            if d > one_plus_eps:
                                continue
                            if d <= 1.0:
                                cand = 0.0
                            else:
                                cand = 0.0 + h / eps * (d - 1.0)
                            if cand < best[i]:
                                best[i] = cand
                                act[i] = -(2 + b)

    # lazy-deletion min-heap over (value, x, y)
    cdef long hcap = 4 * m + 64
    hv_a = np.empty(hcap, dtype=np.float64)
    hx_a = np.empty(hcap, dtype=np.float64)
    hy_a = np.empty(hcap, dtype=np.float64)
    hi_a = np.empty(hcap, dtype=np.int64)
    cdef double[::1] hv = hv_a
    cdef double[::1] hx = hx_a
    cdef double[::1] hy = hy_a
    cdef long[::1] hi = hi_a
    cdef long hsize = 0
    for i in range(m):
        hv[hsize] = best[i]
        hx[hsize] = interior[i, 0]
        hy[hsize] = interior[i, 1]
        hi[hsize] = i
        hsize += 1
        _heap_up(hv, hx, hy, hi, hsize - 1)

    # per-step constraint data, index l in [1, m]
    sdx_a = np.zeros(m + 1, dtype=np.float64)
    sdy_a = np.zeros(m + 1, dtype=np.float64)
    sdb_a = np.zeros(m + 1, dtype=np.float64)
    sdh_a = np.zeros(m + 1, dtype=np.float64)
    sdf_a = np.zeros(m + 1, dtype=np.int64)
    cdef double[::1] sd_x = sdx_a
    cdef double[::1] sd_y = sdy_a
    cdef double[::1] sd_base = sdb_a
    cdef double[::1] sd_h = sdh_a
    cdef long[::1] sd_flat = sdf_a

    cdef long k, a, i2, flat
    for k in range(1, m + 1):
        while True:
            v = hv[0]
            x = hx[0]
            y = hy[0]
            i = hi[0]
            hsize -= 1
            hv[0] = hv[hsize]
            hx[0] = hx[hsize]
            hy[0] = hy[hsize]
            hi[0] = hi[hsize]
            if hsize > 0:
                _heap_down(hv, hx, hy, hi, hsize, 0)
            if chosen[i] == 0 and v == best[i]:
                break
        chosen[i] = 1
        order[k - 1] = i
        taus[k - 1] = v
        a = act[i]
        if a == -1:
            active[k - 1] = -1
            s = _fmaxabs(x, y)
            if s <= n23 or s >= n:
                dv = 0.0
            elif fabs(x) >= fabs(y):
                dv = -mid_coef / s if x > 0.0 else mid_coef / s
            else:
                dv = 0.0
        elif a <= -2:
            active[k - 1] = 0
            b = -2 - a
            dx = x - bcx[b]
            dy = y - bcy[b]
            d = sqrt(dx * dx + dy * dy)
            if 1.0 < d < one_plus_eps:
                dv = bh[b] / eps * dx / d
            else:
                dv = 0.0
        else:
            active[k - 1] = a
            if sd_flat[a] != 0:
                dv = 0.0
            else:
                dx = x - sd_x[a]
                dy = y - sd_y[a]
                d = sqrt(dx * dx + dy * dy)
                if 1.0 < d < one_plus_eps:
                    dv = sd_h[a] / eps * dx / d
                else:
                    dv = 0.0
        derivs[k - 1] = dv

        h = fabs(_tau(_fmaxabs(x, y) - 1.0 - eps, n, n23, flat_value, mid_coef, log_n) - v)
        flat = 1 if h > delta_eps else 0
        if flat != 0 and m_prime < 0:
            m_prime = k
        sd_x[k] = x
        sd_y[k] = y
        sd_base[k] = v
        sd_h[k] = h
        sd_flat[k] = flat

        if k == m:
            break
        if flat != 0:
            for i2 in range(m):
                if chosen[i2] == 0 and v < best[i2]:
                    best[i2] = v
                    act[i2] = k
                    if hsize >= hcap:
                        hcap, hv_a, hx_a, hy_a, hi_a = _grow(hcap, hv_a, hx_a, hy_a, hi_a)
                        hv = hv_a
                        hx = hx_a
                        hy = hy_a
                        hi = hi_a
                    hv[hsize] = v
                    hx[hsize] = interior[i2, 0]
                    hy[hsize] = interior[i2, 1]
                    hi[hsize] = i2
                    hsize += 1
                    _heap_up(hv, hx, hy, hi, hsize - 1)
        else:
            cx = <long>floor(x / cell) + goff
            cy = <long>floor(y / cell) + goff
            for ix in range(cx - 1, cx + 2):
                if ix < 0 or ix >= gdim:
                    continue
                for iy in range(cy - 1, cy + 2):
                    if iy < 0 or iy >= gdim:
                        continue
                    ci = ix * gdim + iy
                    for t in range(gstart[ci], gstart[ci + 1]):
                        i2 = gitems[t]
                        if chosen[i2] != 0:
                            continue
                        dx = interior[i2, 0] - x
                        dy = interior[i2, 1] - y
                        d = sqrt(dx * dx + dy * dy)
                        if d > one_plus_eps:
                            continue
                        if d <= 1.0:
                            cand = v
                        else:
                            cand = v + h / eps * (d - 1.0)
                        if cand < best[i2]:
                            best[i2] = cand
                            act[i2] = k
                            if hsize >= hcap:
                                hcap, hv_a, hx_a, hy_a, hi_a = _grow(hcap, hv_a, hx_a, hy_a, hi_a)
                                hv = hv_a
                                hx = hx_a
                                hy = hy_a
                                hi = hi_a
                            hv[hsize] = cand
                            hx[hsize] = interior[i2, 0]
                            hy[hsize] = interior[i2, 1]
                            hi[hsize] = i2
                            hsize += 1
                            _heap_up(hv, hx, hy, hi, hsize - 1)

    return order_a, taus_a, active_a, derivs_a, (m_prime if m_prime >= 0 else m + 1)


def _grow(long cap, hv_a, hx_a, hy_a, hi_a):
    cdef long newcap = 2 * cap
    nhv = np.empty(newcap, dtype=np.float64)
    nhx = np.empty(newcap, dtype=np.float64)
    nhy = np.empty(newcap, dtype=np.float64)
    nhi = np.empty(newcap, dtype=np.int64)
    nhv[:cap] = hv_a
    nhx[:cap] = hx_a
    nhy[:cap] = hy_a
    nhi[:cap] = hi_a
    return newcap, nhv, nhx, nhy, nhi


# ---------------------------------------------------------------------------
# inverse construction
# ---------------------------------------------------------------------------

cdef struct EnvState:
    double n, eps, one_plus_eps, flat_value, mid_coef, log_n, n23, cap
    long gdim, goff, ncones
    double cell


cdef inline double _eval_t(EnvState* st, double[::1] scx, double[::1] scy,
                           double[::1] sbase, double[::1] sh,
                           long[::1] shead, long[::1] snext,
                           double x, double y) noexcept:
    cdef double v = _tau(_fmaxabs(x, y), st.n, st.n23, st.flat_value, st.mid_coef, st.log_n)
    if st.cap < v:
        v = st.cap
    cdef long cx = <long>floor(x / st.cell) + st.goff
    cdef long cy = <long>floor(y / st.cell) + st.goff
    cdef long ix, iy, j
    cdef double dx, dy, d, c
    for ix in range(cx - 1, cx + 2):
        if ix < 0 or ix >= st.gdim:
            continue
        for iy in range(cy - 1, cy + 2):
            if iy < 0 or iy >= st.gdim:
                continue
            j = shead[ix * st.gdim + iy]
            while j >= 0:
                dx = x - scx[j]
                dy = y - scy[j]
                d = sqrt(dx * dx + dy * dy)
                if d <= st.one_plus_eps:
                    if d <= 1.0:
                        c = sbase[j]
                    else:
                        c = sbase[j] + sh[j] / st.eps * (d - 1.0)
                    if c < v:
                        v = c
                j = snext[j]
    return v


cdef inline double _solve_shift(EnvState* st, double[::1] scx, double[::1] scy,
                                double[::1] sbase, double[::1] sh,
                                long[::1] shead, long[::1] snext,
                                double x0, double yy) except? -1.0e308:
    # shift amount at the preimage: bisect for the root of y + t(y) = x0,
    # then evaluate t at the approximate root so exact value ties (locally
    # flat envelope) come out exact and tie-breaking matches the forward.
    cdef double a = x0 - st.flat_value
    cdef double b = x0
    cdef double mid
    cdef long it = 0
    while b - a > 1e-13:
        mid = 0.5 * (a + b)
        if mid + _eval_t(st, scx, scy, sbase, sh, shead, snext, mid, yy) - x0 < 0.0:
            a = mid
        else:
            b = mid
        it += 1
        if it > 200:
            raise RuntimeError("shear inversion did not converge")
    return _eval_t(st, scx, scy, sbase, sh, shead, snext, 0.5 * (a + b), yy)


def inverse_build(const double[:, ::1] tilde, const double[:, ::1] boundary, params):
    """Backend twin of ``_fallback.inverse_build`` (see there for semantics)."""
    cdef EnvState st
    st.n = params.n
    st.eps = params.epsilon
    st.one_plus_eps = params.one_plus_eps
    st.flat_value = params.target_shift
    st.mid_coef = params.mid_coef
    st.log_n = params.log_n
    st.n23 = params.n_two_thirds
    st.cap = np.inf
    st.cell = st.one_plus_eps
    cdef double delta_eps = params.delta_eps
    cdef long m = tilde.shape[0]

    # cone grid extent: centers lie in the box or the boundary band
    st.goff = <long>floor((st.n + 2.0) / st.cell) + 2
    st.gdim = 2 * st.goff + 2
    cdef long nb_all = boundary.shape[0]
    cdef long maxcones = nb_all + m
    scx_a = np.empty(maxcones, dtype=np.float64)
    scy_a = np.empty(maxcones, dtype=np.float64)
    sbase_a = np.empty(maxcones, dtype=np.float64)
    sh_a = np.empty(maxcones, dtype=np.float64)
    shead_a = np.full(st.gdim * st.gdim, -1, dtype=np.int64)
    snext_a = np.full(maxcones, -1, dtype=np.int64)
    cdef double[::1] scx = scx_a
    cdef double[::1] scy = scy_a
    cdef double[::1] sbase = sbase_a
    cdef double[::1] sh = sh_a
    cdef long[::1] shead = shead_a
    cdef long[::1] snext = snext_a
    st.ncones = 0

    cdef long j, ci
    cdef double x, y, h
    cdef double reach = st.n + st.one_plus_eps
    for j in range(nb_all):
        x = boundary[j, 0]
        y = boundary[j, 1]
        if _fmaxabs(x, y) <= reach:
            h = fabs(_tau(_fmaxabs(x, y) - 1.0 - st.eps, st.n, st.n23, st.flat_value, st.mid_coef, st.log_n) - 0.0)
            if h > delta_eps:
                if 0.0 < st.cap:
                    st.cap = 0.0
            else:
                scx[st.ncones] = x
                scy[st.ncones] = y
                sbase[st.ncones] = 0.0
                sh[st.ncones] = h
                ci = (<long>floor(x / st.cell) + st.goff) * st.gdim + (<long>floor(y / st.cell) + st.goff)
                snext[st.ncones] = shead[ci]
                shead[ci] = st.ncones
                st.ncones += 1

    order_a = np.empty(m, dtype=np.int64)
    taus_a = np.empty(m, dtype=np.float64)
    pre_a = np.empty((m, 2), dtype=np.float64)
    cdef long[::1] order = order_a
    cdef double[::1] taus = taus_a
    cdef double[:, ::1] pre = pre_a
    if m == 0:
        return order_a, taus_a, pre_a

    best_a = np.empty(m, dtype=np.float64)
    py_a = np.empty(m, dtype=np.float64)
    chosen_a = np.zeros(m, dtype=np.int64)
    cdef double[::1] best = best_a
    cdef double[::1] py = py_a
    cdef long[::1] chosen = chosen_a

    # cached-preimage grid, doubly linked
    cdef double rcell = st.one_plus_eps + st.flat_value
    cdef long coff = <long>floor((st.n + st.flat_value + 2.0) / rcell) + 2
    cdef long cdim = 2 * coff + 2
    chead_a = np.full(cdim * cdim, -1, dtype=np.int64)
    cnext_a = np.full(m, -1, dtype=np.int64)
    cprev_a = np.full(m, -1, dtype=np.int64)
    ccell_a = np.full(m, -1, dtype=np.int64)
    cdef long[::1] chead = chead_a
    cdef long[::1] cnext = cnext_a
    cdef long[::1] cprev = cprev_a
    cdef long[::1] ccell = ccell_a

    cdef long i
    cdef double y1, g0
    for i in range(m):
        g0 = _solve_shift(&st, scx, scy, sbase, sh, shead, snext, tilde[i, 0], tilde[i, 1])
        best[i] = g0
        py[i] = tilde[i, 0] - g0
        y1 = py[i]
        ci = (<long>floor(y1 / rcell) + coff) * cdim + (<long>floor(tilde[i, 1] / rcell) + coff)
        cnext[i] = chead[ci]
        cprev[i] = -1
        if chead[ci] >= 0:
            cprev[chead[ci]] = i
        chead[ci] = i
        ccell[i] = ci

    cdef long hcap = 4 * m + 64
    hv_a = np.empty(hcap, dtype=np.float64)
    hx_a = np.empty(hcap, dtype=np.float64)
    hy_a = np.empty(hcap, dtype=np.float64)
    hi_a = np.empty(hcap, dtype=np.int64)
    cdef double[::1] hv = hv_a
    cdef double[::1] hx = hx_a
    cdef double[::1] hy = hy_a
    cdef long[::1] hi = hi_a
    cdef long hsize = 0
    for i in range(m):
        hv[hsize] = best[i]
        hx[hsize] = tilde[i, 0]
        hy[hsize] = tilde[i, 1]
        hi[hsize] = i
        hsize += 1
        _heap_up(hv, hx, hy, hi, hsize - 1)

    cdef long k, i2, ix, iy, ccx, ccy, nci, t_next
    cdef double g, cx0, g2
    for k in range(1, m + 1):
        while True:
            g = hv[0]
            x = hx[0]
            y = hy[0]
            i = hi[0]
            hsize -= 1
            hv[0] = hv[hsize]
            hx[0] = hx[hsize]
            hy[0] = hy[hsize]
            hi[0] = hi[hsize]
            if hsize > 0:
                _heap_down(hv, hx, hy, hi, hsize, 0)
            if chosen[i] == 0 and g == best[i]:
                break
        chosen[i] = 1
        order[k - 1] = i
        taus[k - 1] = g
        cx0 = py[i]
        pre[i, 0] = cx0
        pre[i, 1] = y

        h = fabs(_tau(_fmaxabs(cx0, y) - 1.0 - st.eps, st.n, st.n23, st.flat_value, st.mid_coef, st.log_n) - g)
        if h > delta_eps:
            if g < st.cap:
                st.cap = g
            for i2 in range(m):
                if chosen[i2] == 0 and g < best[i2]:
                    best[i2] = g
                    y1 = tilde[i2, 0] - g
                    nci = (<long>floor(y1 / rcell) + coff) * cdim + (<long>floor(tilde[i2, 1] / rcell) + coff)
                    if nci != ccell[i2]:
                        if cprev[i2] >= 0:
                            cnext[cprev[i2]] = cnext[i2]
                        else:
                            chead[ccell[i2]] = cnext[i2]
                        if cnext[i2] >= 0:
                            cprev[cnext[i2]] = cprev[i2]
                        cnext[i2] = chead[nci]
                        cprev[i2] = -1
                        if chead[nci] >= 0:
                            cprev[chead[nci]] = i2
                        chead[nci] = i2
                        ccell[i2] = nci
                    py[i2] = y1
                    if hsize >= hcap:
                        hcap, hv_a, hx_a, hy_a, hi_a = _grow(hcap, hv_a, hx_a, hy_a, hi_a)
                        hv = hv_a
                        hx = hx_a
                        hy = hy_a
                        hi = hi_a
                    hv[hsize] = g
                    hx[hsize] = tilde[i2, 0]
                    hy[hsize] = tilde[i2, 1]
                    hi[hsize] = i2
                    hsize += 1
                    _heap_up(hv, hx, hy, hi, hsize - 1)
        else:
            ci = (<long>floor(cx0 / st.cell) + st.goff) * st.gdim + (<long>floor(y / st.cell) + st.goff)
            scx[st.ncones] = cx0
            scy[st.ncones] = y
            sbase[st.ncones] = g
            sh[st.ncones] = h
            snext[st.ncones] = shead[ci]
            shead[ci] = st.ncones
            st.ncones += 1
            ccx = <long>floor(cx0 / rcell) + coff
            ccy = <long>floor(y / rcell) + coff
            for ix in range(ccx - 1, ccx + 2):
                if ix < 0 or ix >= cdim:
                    continue
                for iy in range(ccy - 1, ccy + 2):
                    if iy < 0 or iy >= cdim:
                        continue
                    i2 = chead[ix * cdim + iy]
                    while i2 >= 0:
                        if chosen[i2] == 0:
                            g2 = _solve_shift(&st, scx, scy, sbase, sh, shead, snext,
                                              tilde[i2, 0], tilde[i2, 1])
                            if g2 < best[i2]:
                                y1 = tilde[i2, 0] - g2
                                best[i2] = g2
                                nci = (<long>floor(y1 / rcell) + coff) * cdim + (<long>floor(tilde[i2, 1] / rcell) + coff)
                                if nci != ccell[i2]:
                                    if cprev[i2] >= 0:
                                        cnext[cprev[i2]] = cnext[i2]
                                    else:
                                        chead[ccell[i2]] = cnext[i2]
                                    if cnext[i2] >= 0:
                                        cprev[cnext[i2]] = cprev[i2]
                                    # continue scanning from the old successor
                                    # before relinking into a possibly scanned cell
                                py[i2] = y1
                                if hsize >= hcap:
                                    hcap, hv_a, hx_a, hy_a, hi_a = _grow(hcap, hv_a, hx_a, hy_a, hi_a)
                                    hv = hv_a
                                    hx = hx_a
                                    hy = hy_a
                                    hi = hi_a
                                hv[hsize] = g2
                                hx[hsize] = tilde[i2, 0]
                                hy[hsize] = tilde[i2, 1]
                                hi[hsize] = i2
                                hsize += 1
                                _heap_up(hv, hx, hy, hi, hsize - 1)
                                if nci != ccell[i2]:
                                    t_next = cnext[i2]
                                    cnext[i2] = chead[nci]
                                    cprev[i2] = -1
                                    if chead[nci] >= 0:
                                        cprev[chead[nci]] = i2
                                    chead[nci] = i2
                                    ccell[i2] = nci
                                    i2 = t_next
                                    continue
                        i2 = cnext[i2]

    return order_a, taus_a, pre_a
