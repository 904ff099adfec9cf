"""Verification suite: good configurations, transformation properties,
Jacobian oracle, Monte Carlo identities, and tagged-particle displacement.

Good configurations are detected through continuum percolation clusters of
interior particles (edges at Euclidean distance <= 1+eps): a configuration
is good when no cluster reaches more than ``3 ln n`` beyond any of its
members.  On good configurations (in the quantitative regime) the center of
the box is shifted by exactly the target amount and the proviso never
triggers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.stats import beta as _beta

from .config import Configuration, check_hard_core
from .geometry import max_norm
from .params import ModelParams
from .profile import BASE_ID, make_slowdown, slowdown_value, tau_n
from .transform import (TransformTrace, apply_shift, build_forward,
                        build_inverse, influence_chains, log_phi_phibar,
                        profile_state_from_trace)


# ---------------------------------------------------------------------------
# percolation clusters and the good set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterReport:
    """Per-particle cluster reach and the good-configuration verdict."""

    reach: np.ndarray        # (m,) max max-norm over the particle's cluster
    cluster_id: np.ndarray   # (m,) root index per particle
    good: bool
    worst_excess: float      # max over particles of reach - |x| - 3 ln n


def cluster_reach(cfg: Configuration, params: ModelParams) -> ClusterReport:
    """Connected components at distance <= 1+eps, with max-norm reach."""
    pts = cfg.interior
    m = pts.shape[0]
    if m == 0:
        return ClusterReport(reach=np.empty(0), cluster_id=np.empty(0, np.int64),
                             good=True, worst_excess=-math.inf)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(params.one_plus_eps, output_type="ndarray")
    adj = coo_matrix((np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])),
                     shape=(m, m))
    _, labels = connected_components(adj, directed=False)
    labels = labels.astype(np.int64)
    norms = np.max(np.abs(pts), axis=1)
    reach_per_label = np.zeros(labels.max() + 1)
    np.maximum.at(reach_per_label, labels, norms)
    reach = reach_per_label[labels]
    worst = float(np.max(reach - norms - 3.0 * params.log_n))
    return ClusterReport(reach=reach, cluster_id=labels,
                         good=worst <= 0.0, worst_excess=worst)


def is_good(cfg: Configuration, params: ModelParams) -> bool:
    return cluster_reach(cfg, params).good


def make_bad_chain_config(params: ModelParams, y0: float = 0.0) -> Configuration:
    """Outward particle chain violating the cluster-reach bound.

    Spacing sits strictly inside (1, 1+eps] so the chain is hard-core valid
    and fully connected; its length exceeds 3 ln n so the innermost member
    sees a reach beyond the allowed excess.
    """
    spacing = 1.0 + params.epsilon / 2.0
    count = math.ceil(3.0 * params.log_n / spacing) + 3
    xs = np.array([[i * spacing, y0] for i in range(count)])
    if np.max(xs) > params.n:
        raise ValueError("box too small to host a reach-violating chain")
    return Configuration(n=params.n, interior=xs, boundary=np.empty((0, 2)))


# ---------------------------------------------------------------------------
# single-configuration property verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    """Outcome of the structural property checks for one configuration."""

    good: bool
    m_prime: int
    phi: float
    phi_bar: float
    log_phi_phibar: float
    max_shift: float
    p1_boundary_fixed: bool
    p2_center_shift: bool | None     # None when not applicable (bad/small n)
    p3_lipschitz: bool
    p5_roundtrip: bool
    p6_density_positive: bool
    hard_core_preserved: bool
    monotone_shifts: bool
    m_prime_consistent: bool | None  # proviso never used on good configs
    roundtrip_err: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        checks = [self.p1_boundary_fixed, self.p3_lipschitz, self.p5_roundtrip,
                  self.p6_density_positive, self.hard_core_preserved,
                  self.monotone_shifts]
        if self.p2_center_shift is not None:
            checks.append(self.p2_center_shift)
        if self.m_prime_consistent is not None:
            checks.append(self.m_prime_consistent)
        return all(checks)


def verify_properties(cfg: Configuration, params: ModelParams,
                      trace: TransformTrace | None = None,
                      pair_limit: int = 6_000) -> VerificationReport:
    """Check the structural transformation properties on one configuration.

    The pairwise Lipschitz check is quadratic; above ``pair_limit``
    particles it falls back to a deterministic subsample of pairs.
    """
    if trace is None:
        trace = build_forward(cfg, params)
    m = trace.size
    wit: dict = {}
    report = cluster_reach(cfg, params)
    good = report.good

    shifted = apply_shift(cfg, trace, +1)
    mirrored = apply_shift(cfg, trace, -1)

    p1 = (np.array_equal(cfg.boundary, shifted.boundary)
          and np.array_equal(cfg.boundary, mirrored.boundary))

    # property (2): exact target shift in the sqrt(n)-box on good configs
    p2: bool | None = None
    m_prime_ok: bool | None = None
    if good and params.theorem_regime and m:
        shifts = trace.shift_by_particle()
        norms = np.max(np.abs(cfg.interior), axis=1)
        inner = norms <= math.sqrt(params.n)
        dev = np.abs(shifts[inner] - params.target_shift)
        p2 = bool(dev.size == 0 or np.max(dev) <= 1e-12)
        if not p2:
            wit["p2_worst"] = float(np.max(dev))
        m_prime_ok = trace.m_prime == m + 1
        if not m_prime_ok:
            wit["m_prime"] = trace.m_prime

    # property (3): pairwise Lipschitz bound on the shift amounts
    p3 = True
    if m >= 2:
        shifts = trace.shift_by_particle()
        if m <= pair_limit:
            idx = np.arange(m)
        else:
            idx = np.linspace(0, m - 1, pair_limit).astype(np.int64)
        pts = cfg.interior[idx]
        sh = shifts[idx]
        dx = pts[:, 0][:, None] - pts[:, 0][None, :]
        dy = pts[:, 1][:, None] - pts[:, 1][None, :]
        dist = np.sqrt(dx * dx + dy * dy)
        viol = np.abs(sh[:, None] - sh[None, :]) - params.delta * dist - 1e-12
        worst = float(np.max(viol))
        p3 = worst <= 0.0
        if not p3:
            wit["p3_worst"] = worst

    # property (5): round trip both ways
    back, inv_order, _ = build_inverse(shifted, params)
    err = float(np.max(np.abs(back.interior - cfg.interior))) if m else 0.0
    fwd_of_inv, _, _ = build_inverse(cfg, params)
    trace2 = build_forward(fwd_of_inv, params, check=False)
    again = apply_shift(fwd_of_inv, trace2, +1)
    err2 = float(np.max(np.abs(again.interior - cfg.interior))) if m else 0.0
    roundtrip_err = max(err, err2)
    p5 = roundtrip_err <= 1e-9
    if not p5:
        wit["roundtrip_err"] = roundtrip_err

    p6 = trace.phi > 0.0 and trace.phi_bar > 0.0

    hc = not check_hard_core(shifted) and not check_hard_core(mirrored)
    if not hc:
        wit["hard_core_pairs"] = check_hard_core(shifted)[:3]

    monotone = bool(np.all(np.diff(trace.shifts) >= 0.0)) if m >= 2 else True
    if monotone and m:
        monotone = bool(trace.shifts[0] >= 0.0)

    return VerificationReport(
        good=good, m_prime=trace.m_prime, phi=trace.phi, phi_bar=trace.phi_bar,
        log_phi_phibar=log_phi_phibar(trace),
        max_shift=float(np.max(trace.shifts)) if m else 0.0,
        p1_boundary_fixed=bool(p1), p2_center_shift=p2, p3_lipschitz=bool(p3),
        p5_roundtrip=bool(p5), p6_density_positive=bool(p6),
        hard_core_preserved=bool(hc), monotone_shifts=monotone,
        m_prime_consistent=m_prime_ok, roundtrip_err=roundtrip_err,
        witnesses=wit)


# ---------------------------------------------------------------------------
# finite-difference Jacobian oracle
# ---------------------------------------------------------------------------

def fd_jacobian(cfg: Configuration, params: ModelParams, step: float) -> float:
    """|det| of the full interior-coordinate map by central differences.

    Differentiates all 2m coordinates (including the fixed y block, which
    comes out as identity rows) and is therefore a path-independent oracle
    for the construction's density.  Cost grows as 4m trace builds; capped
    at m <= 12.
    """
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    m = cfg.interior.shape[0]
    if m > 12:
        raise ValueError(f"fd_jacobian limited to m <= 12 particles, got {m}")
    if m == 0:
        return 1.0

    def forward_flat(theta: np.ndarray) -> np.ndarray:
        c = Configuration(n=cfg.n, interior=theta.reshape(m, 2),
                          boundary=cfg.boundary)
        tr = build_forward(c, params, check=False)
        return apply_shift(c, tr, +1).interior.ravel()

    theta0 = cfg.interior.ravel()
    jac = np.empty((2 * m, 2 * m))
    for j in range(2 * m):
        tp = theta0.copy()
        tm = theta0.copy()
        tp[j] += step
        tm[j] -= step
        jac[:, j] = (forward_flat(tp) - forward_flat(tm)) / (2.0 * step)
    return float(abs(np.linalg.det(jac)))


def switch_margin(cfg: Configuration, params: ModelParams) -> float:
    """Smallest margin to any construction switch locus.

    Covers: the value gap between the selected particle and the runner-up
    at every step, the gap between the active constraint and the second
    candidate at the selected particle, geometric kink margins of the
    active constraint (support radii, base-profile breakpoints and
    diagonal), and the proviso threshold margin of every emitted
    constraint.  Used to reject configurations too close to a derivative
    discontinuity before comparing against finite differences.
    """
    trace = build_forward(cfg, params, check=False)
    m = trace.size
    margin = math.inf
    state = profile_state_from_trace(cfg, params, trace, upto=0)
    remaining = set(range(m))
    for k in range(m):
        i = int(trace.order[k])
        vals = sorted((state.value_at(cfg.interior[j]), j) for j in remaining)
        if len(vals) >= 2:
            margin = min(margin, vals[1][0] - vals[0][0])
        x = cfg.interior[i]
        # candidate gap at the selected particle
        cands = [tau_n(max_norm(x), params)]
        for sd in state.slowdowns:
            v = slowdown_value(sd, x, params)
            if math.isfinite(v):
                cands.append(v)
        cands.sort()
        if len(cands) >= 2:
            margin = min(margin, cands[1] - cands[0])
        # geometric margins of the active constraint
        a = int(trace.active[k])
        if a == BASE_ID:
            s = max_norm(x)
            margin = min(margin, abs(s - params.n_two_thirds), abs(s - params.n),
                         abs(abs(x[0]) - abs(x[1])))
        else:
            _, act_id = state.envelope_eval(x)
            if act_id != BASE_ID:
                sd = state.slowdowns[act_id]
                d = math.hypot(x[0] - sd.center[0], x[1] - sd.center[1])
                margin = min(margin, abs(d - 1.0), abs(params.one_plus_eps - d))
        sd_new = make_slowdown(x, trace.shifts[k], params)
        margin = min(margin, abs(sd_new.height - params.delta_eps))
        state.add_slowdown(sd_new)
        remaining.discard(i)
    return margin


# ---------------------------------------------------------------------------
# Monte Carlo identities and bounds
# ---------------------------------------------------------------------------

def default_test_functions(params: ModelParams) -> dict:
    """Constant, total interior count, and a fixed-window count."""
    n = params.n

    def count_window(cfg: Configuration) -> float:
        if not cfg.count:
            return 0.0
        x = cfg.interior[:, 0]
        y = cfg.interior[:, 1]
        return float(np.sum((x >= 0.0) & (x <= n / 2.0)
                            & (y >= -n / 2.0) & (y <= n / 2.0)))

    return {
        "one": lambda cfg: 1.0,
        "count_box": lambda cfg: float(cfg.count),
        "count_window": count_window,
    }


def _batch_se(values: np.ndarray, n_batches: int = 100) -> float:
    """Standard error of the mean by batch means (MCMC-correlation safe)."""
    n = values.shape[0]
    nb = min(n_batches, n)
    if nb < 2:
        return float("inf")
    usable = (n // nb) * nb
    batches = values[:usable].reshape(nb, -1).mean(axis=1)
    return float(np.std(batches, ddof=1) / math.sqrt(nb))


def change_of_variables_check(samples, params: ModelParams,
                              test_fns: dict | None = None) -> list[dict]:
    """Monte Carlo check of the measure-tilting identity.

    For each test function f, compares the sample means of
    ``f(T(X)) * phi(X)`` and ``f(X)``; the identity says they are equal.
    Returns one row per function with means, batch-means standard error of
    the paired difference, and the studentized difference.
    """
    if test_fns is None:
        test_fns = default_test_functions(params)
    names = list(test_fns)
    lhs = {k: [] for k in names}
    rhs = {k: [] for k in names}
    for cfg in samples:
        trace = build_forward(cfg, params, check=False)
        image = apply_shift(cfg, trace, +1)
        for k in names:
            lhs[k].append(test_fns[k](image) * trace.phi)
            rhs[k].append(test_fns[k](cfg))
    rows = []
    for k in names:
        a = np.asarray(lhs[k])
        b = np.asarray(rhs[k])
        diff = a - b
        se = _batch_se(diff)
        d = float(np.mean(diff))
        rows.append({
            "f": k,
            "mean_transformed": float(np.mean(a)),
            "mean_plain": float(np.mean(b)),
            "diff": d,
            "se_diff": se,
            "z": d / se if se > 0 else 0.0,
            "n_samples": int(a.shape[0]),
        })
    return rows


def binom_upper_cp(x: int, n: int, conf: float = 0.99) -> float:
    """One-sided Clopper-Pearson upper confidence bound for a proportion."""
    if x >= n:
        return 1.0
    return float(_beta.ppf(conf, x + 1, n - x))


def bound_checks(samples, params: ModelParams) -> dict:
    """Empirical good-configuration fraction and density-log bound.

    Outside the quantitative regime (n < 200) the numbers are still
    reported but flagged.
    """
    n_tot = 0
    n_bad = 0
    logs = []
    max_shifts = []
    for cfg in samples:
        trace = build_forward(cfg, params, check=False)
        rep = cluster_reach(cfg, params)
        n_tot += 1
        if not rep.good:
            n_bad += 1
        logs.append(abs(log_phi_phibar(trace)))
        max_shifts.append(float(np.max(trace.shifts)) if trace.size else 0.0)
    logs_a = np.asarray(logs)
    return {
        "n_samples": n_tot,
        "bad_count": n_bad,
        "good_fraction": 1.0 - n_bad / n_tot if n_tot else 1.0,
        "p_bad_upper99": binom_upper_cp(n_bad, n_tot) if n_tot else 1.0,
        "bad_bound": 1.0 / params.n,
        "mean_abs_log_phiphibar": float(np.mean(logs_a)) if n_tot else 0.0,
        "se_abs_log_phiphibar": _batch_se(logs_a),
        "log_bound": 120.0 * params.delta ** 2,
        "max_shift_seen": max(max_shifts) if max_shifts else 0.0,
        "theorem_regime": params.theorem_regime,
    }


# ---------------------------------------------------------------------------
# tagged-particle displacement
# ---------------------------------------------------------------------------

def pick_unique_near(cfg: Configuration, anchor, radius: float):
    """Default particle-picking rule: the unique particle within max-norm
    ``radius`` of the anchor, else None."""
    if not cfg.count:
        return None
    d = np.max(np.abs(cfg.interior - np.asarray(anchor)), axis=1)
    hits = np.nonzero(d <= radius)[0]
    if hits.shape[0] != 1:
        return None
    return cfg.interior[hits[0]].copy()


def tagged_displacement(samples, params: ModelParams, anchor,
                        radius: float = 0.5, collect_rows: bool = False) -> dict:
    """Displacement statistics for the default particle-picking rule.

    Reports the pick probability, the probability of a displacement of at
    least half the target shift, the mean square displacement, and the
    empirically measured compatibility of the rule with the transformation.
    The quantitative displacement bound is only meaningful when the rule's
    premises held; the report says whether they did.
    """
    if max_norm(anchor) > math.sqrt(params.n) / 2.0:
        raise ValueError(f"anchor {anchor} outside the sqrt(n)/2 box")
    anchor = np.asarray(anchor, dtype=np.float64)
    thr = 0.5 * params.target_shift
    n_tot = 0
    n_present = 0
    n_big = 0
    sq_sum = 0.0
    n_compat = 0
    rows = []
    for cfg in samples:
        n_tot += 1
        xi = pick_unique_near(cfg, anchor, radius)
        if xi is None:
            if collect_rows:
                rows.append((n_tot - 1, 0, 0.0, 0.0, 0.0, 0))
            continue
        n_present += 1
        disp = float(np.max(np.abs(xi - anchor)))
        if disp >= thr:
            n_big += 1
        sq_sum += disp * disp
        compat = 0
        trace = build_forward(cfg, params, check=False)
        image = apply_shift(cfg, trace, +1)
        xi_img = pick_unique_near(image, anchor, radius)
        if xi_img is not None:
            shifts = trace.shift_by_particle()
            own = np.nonzero((cfg.interior[:, 0] == xi[0])
                             & (cfg.interior[:, 1] == xi[1]))[0]
            expected_x = xi[0] + shifts[own[0]]
            if xi_img[0] == expected_x and xi_img[1] == xi[1]:
                n_compat += 1
                compat = 1
        if collect_rows:
            rows.append((n_tot - 1, 1, float(xi[0]), float(xi[1]), disp, compat))
    p_present = n_present / n_tot if n_tot else 0.0
    compat_frac = n_compat / n_present if n_present else 0.0
    premises = {
        "pick_probability_above_half": p_present > 0.5,
        "rule_compatible_everywhere": n_present > 0 and n_compat == n_present,
        "delta_in_corollary_range": params.delta <= 1.0 / 30.0,
    }
    out = {
        "n_samples": n_tot,
        "p_present": p_present,
        "p_displacement_ge_half_target": n_big / n_tot if n_tot else 0.0,
        "displacement_threshold": thr,
        "mean_square_displacement": sq_sum / n_tot if n_tot else 0.0,
        "msd_lower_bound": params.target_shift ** 2 / 8.0,
        "compat_fraction": compat_frac,
        "premises": premises,
        "premises_met": all(premises.values()),
    }
    if out["premises_met"]:
        out["displacement_bound_holds"] = out["p_displacement_ge_half_target"] >= 0.125
    if collect_rows:
        out["rows"] = rows
    return out


def ancestor_consistency(cfg: Configuration, params: ModelParams,
                         trace: TransformTrace | None = None) -> dict:
    """Influence-chain diagnostics: shift sandwich and chain-link distance.

    On good configurations in the quantitative regime the ancestor's max
    norm may exceed the particle's by at most ``3 ln n + 2``.
    """
    if trace is None:
        trace = build_forward(cfg, params, check=False)
    chains = influence_chains(trace)
    worst_excess = -math.inf
    max_link = 0.0
    sandwich_ok = True
    for ch in chains:
        k = ch.step
        x = cfg.interior[trace.order[k - 1]]
        t_x = trace.shifts[k - 1]
        if ch.root == "boundary":
            anc_norm = float(params.n)
        else:
            anc_norm = max_norm(cfg.interior[ch.ancestor])
        lo = tau_n(anc_norm, params)
        hi = tau_n(max_norm(x), params)
        if not (lo <= t_x + 1e-12 and t_x <= hi + 1e-12):
            sandwich_ok = False
        if ch.root != "boundary":
            worst_excess = max(worst_excess,
                               anc_norm - max_norm(x) - 3.0 * params.log_n - 2.0)
        for a, b in zip(ch.chain, ch.chain[1:]):
            if b >= 1 and a <= trace.m_prime:
                pa = cfg.interior[trace.order[a - 1]]
                pb = cfg.interior[trace.order[b - 1]]
                max_link = max(max_link, math.hypot(pa[0] - pb[0], pa[1] - pb[1]))
    return {
        "sandwich_ok": sandwich_ok,
        "worst_ancestor_excess": worst_excess,
        "max_chain_link": max_link,
        "link_bound": params.one_plus_eps,
    }
