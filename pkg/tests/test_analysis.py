import math

import numpy as np
import pytest

import hardshift as hs
from hardshift import analysis

from _oracles import bfs_cluster_reach
from conftest import random_hardcore_config


def _cfg(n, interior, boundary=()):
    return hs.Configuration(n=n, interior=list(interior), boundary=list(boundary))


def test_cluster_reach_single_particle(params32):
    rep = analysis.cluster_reach(_cfg(32, [(3.0, 4.0)]), params32)
    assert rep.reach[0] == 4.0
    assert rep.good


def test_cluster_closed_at_exact_radius(params32):
    r = params32.one_plus_eps
    rep = analysis.cluster_reach(_cfg(32, [(0.0, 0.0), (r, 0.0)]), params32)
    assert rep.cluster_id[0] == rep.cluster_id[1]
    just_beyond = np.nextafter(r, 2.0)
    rep2 = analysis.cluster_reach(_cfg(32, [(0.0, 0.0), (just_beyond, 0.0)]), params32)
    assert rep2.cluster_id[0] != rep2.cluster_id[1]


def test_cluster_reach_matches_bfs_oracle(params32):
    rng = np.random.default_rng(13)
    for _ in range(30):
        cfg = random_hardcore_config(32, 50, rng)
        rep = analysis.cluster_reach(cfg, params32)
        reach, labels = bfs_cluster_reach(cfg.interior, params32.one_plus_eps)
        assert np.array_equal(rep.reach, reach)
        # same partition (label values may differ)
        for a in range(cfg.count):
            for b in range(a + 1, cfg.count):
                assert ((labels[a] == labels[b])
                        == (rep.cluster_id[a] == rep.cluster_id[b]))


def test_is_good_trivial_cases(params32):
    assert analysis.is_good(_cfg(32, []), params32)
    assert analysis.is_good(_cfg(32, [(10.0, -3.0)]), params32)


def test_bad_chain_detected(params32):
    cfg = analysis.make_bad_chain_config(params32)
    assert not analysis.is_good(cfg, params32)
    assert analysis.cluster_reach(cfg, params32).worst_excess > 0


def test_verify_properties_on_equilibrium(params32, equilibrium32):
    rep = analysis.verify_properties(equilibrium32[0], params32)
    assert rep.p1_boundary_fixed
    assert rep.p3_lipschitz
    assert rep.p5_roundtrip
    assert rep.p6_density_positive
    assert rep.hard_core_preserved
    assert rep.monotone_shifts
    assert rep.p2_center_shift is None  # n=32 is below the quantitative regime
    assert rep.passed


def test_verify_properties_empty(params32):
    rep = analysis.verify_properties(_cfg(32, []), params32)
    assert rep.passed
    assert rep.max_shift == 0.0


def test_verify_properties_bad_config(params32):
    cfg = analysis.make_bad_chain_config(params32)
    rep = analysis.verify_properties(cfg, params32)
    assert not rep.good
    assert rep.p2_center_shift is None
    assert rep.p1_boundary_fixed and rep.p3_lipschitz and rep.p5_roundtrip
    assert rep.hard_core_preserved and rep.monotone_shifts
    assert rep.passed


def test_fd_jacobian_trivial(params32):
    assert analysis.fd_jacobian(_cfg(32, []), params32, 1e-6) == 1.0
    val = analysis.fd_jacobian(_cfg(32, [(0.0, 0.0)]), params32, 1e-6)
    assert abs(val - 1.0) <= 1e-9


def test_fd_jacobian_matches_density(params32):
    rng = np.random.default_rng(41)
    found = 0
    while found < 3:
        pts = []
        seed_pt = np.array([rng.uniform(12, 28), rng.uniform(-15, 15)])
        while len(pts) < 4:
            cand = seed_pt + rng.uniform(-2.5, 2.5, size=2)
            if all((cand[0] - p[0]) ** 2 + (cand[1] - p[1]) ** 2 > 1.02 ** 2
                   for p in pts):
                pts.append(cand)
        cfg = _cfg(32, pts)
        if analysis.switch_margin(cfg, params32) < 1e-4:
            continue
        tr = hs.build_forward(cfg, params32)
        fd = analysis.fd_jacobian(cfg, params32, 1e-6)
        assert abs(fd - tr.phi) / tr.phi <= 1e-4
        found += 1


def test_fd_jacobian_validation(params32):
    with pytest.raises(ValueError):
        analysis.fd_jacobian(_cfg(32, [(0.0, 0.0)]), params32, 0.0)
    rng = np.random.default_rng(2)
    big = random_hardcore_config(32, 13, rng)
    with pytest.raises(ValueError):
        analysis.fd_jacobian(big, params32, 1e-6)


def test_change_of_variables_smoke():
    params = hs.derive_params(8, 0.3, 0.5)
    samples = hs.sample_stream(params, [], 150, 1500, 2, seed=55)
    rows = analysis.change_of_variables_check(samples, params)
    by_name = {r["f"]: r for r in rows}
    assert set(by_name) == {"one", "count_box", "count_window"}
    for r in rows:
        assert abs(r["z"]) <= 4.0, r
    one = by_name["one"]
    assert abs(one["mean_transformed"] - 1.0) <= 4 * one["se_diff"] + 1e-6


def test_bound_checks_smoke(params32, boundary32):
    stats = analysis.bound_checks(
        hs.sample_stream(params32, boundary32, 200, 50, 1, seed=6), params32)
    assert stats["n_samples"] == 50
    assert not stats["theorem_regime"]
    assert stats["good_fraction"] >= 0.9
    assert stats["mean_abs_log_phiphibar"] < stats["log_bound"]


def test_binom_upper_cp():
    # zero failures in 2000 trials: upper bound ~ 1 - 0.01^(1/2000)
    got = analysis.binom_upper_cp(0, 2000)
    want = 1.0 - 0.01 ** (1.0 / 2000.0)
    assert abs(got - want) < 1e-10
    assert analysis.binom_upper_cp(5, 5) == 1.0


def test_tagged_displacement_rules(params32):
    # no particle near the anchor -> excluded from displacement stats
    empty = _cfg(32, [])
    stats = analysis.tagged_displacement([empty], params32, (0.0, 0.0))
    assert stats["p_present"] == 0.0
    assert stats["mean_square_displacement"] == 0.0
    # particle exactly at the anchor -> displacement zero, compatible
    at = _cfg(32, [(0.0, 0.0)])
    stats = analysis.tagged_displacement([at], params32, (0.0, 0.0))
    assert stats["p_present"] == 1.0
    assert stats["mean_square_displacement"] == 0.0
    assert stats["compat_fraction"] == 1.0
    # two particles in the window -> ambiguous pick
    two = _cfg(32, [(-0.4, -0.4), (0.45, 0.45)])
    stats = analysis.tagged_displacement([two], params32, (0.0, 0.0))
    assert stats["p_present"] == 0.0


def test_tagged_displacement_anchor_validation(params32):
    with pytest.raises(ValueError):
        analysis.tagged_displacement([], params32, (10.0, 0.0))


def test_ancestor_consistency(params32, equilibrium32):
    out = analysis.ancestor_consistency(equilibrium32[0], params32)
    assert out["sandwich_ok"]
    assert out["max_chain_link"] <= out["link_bound"] + 1e-12


def test_switch_margin_positive_on_sparse(params32):
    rng = np.random.default_rng(3)
    cfg = random_hardcore_config(32, 5, rng, min_dist=1.5)
    assert analysis.switch_margin(cfg, params32) > 0


def test_log_density_scales_with_delta_squared(boundary32):
    # both density-log contributions are quadratic in the Lipschitz budget,
    # so halving delta should cut mean |log(phi phibar)| by about 4
    p_half = hs.derive_params(32, 0.5, 0.5)
    p_quarter = hs.derive_params(32, 0.5, 0.25)
    samples = hs.sample(p_half, boundary32, 300, 60, 2, seed=404)
    means = []
    for params in (p_half, p_quarter):
        logs = []
        for cfg in samples:
            tr = hs.build_forward(cfg, params, check=False)
            logs.append(abs(hs.log_phi_phibar(tr)))
        means.append(np.mean(logs))
    ratio = means[0] / means[1]
    assert 2.0 <= ratio <= 8.0, ratio
