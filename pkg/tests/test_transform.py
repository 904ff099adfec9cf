import math

import numpy as np
import pytest

import hardshift as hs
from hardshift import transform
from hardshift.profile import ShiftProfileState, make_slowdown

from conftest import random_hardcore_config


@pytest.fixture(scope="module")
def p256():
    return hs.derive_params(256, 1.0, 0.5)


def _empty(n):
    return hs.Configuration(n=n, interior=[], boundary=[])


def test_empty_trace(p256):
    tr = hs.build_forward(_empty(256), p256)
    assert tr.size == 0
    assert tr.phi == 1.0 and tr.phi_bar == 1.0
    assert tr.m_prime == 1  # m + 1 with m = 0


def test_single_particle_flat_region(p256):
    cfg = hs.Configuration(n=256, interior=[[0.0, 0.0]], boundary=[])
    tr = hs.build_forward(cfg, p256)
    assert tr.shifts[0] == p256.target_shift
    assert tr.derivs[0] == 0.0
    assert tr.active[0] == -1
    assert tr.phi == 1.0


def test_close_pair_gets_equal_shifts(p256):
    # the construction equalizes shifts across distances <= 1 even for
    # inputs outside the hard-core set (checked with validation disabled)
    cfg = hs.Configuration(n=256, interior=[[0.0, 0.0], [0.4, 0.9]], boundary=[])
    tr = hs.build_forward(cfg, p256, check=False)
    assert tr.shifts[0] == tr.shifts[1]
    with pytest.raises(ValueError):
        hs.build_forward(cfg, p256)  # hard-core validation rejects it


def test_apply_empty_and_boundary_fixed(p256, equilibrium32, params32):
    cfg = _empty(256)
    out = hs.apply_shift(cfg, hs.build_forward(cfg, p256), +1)
    assert out.count == 0

    cfg = equilibrium32[0]
    tr = hs.build_forward(cfg, params32)
    plus = hs.apply_shift(cfg, tr, +1)
    minus = hs.apply_shift(cfg, tr, -1)
    assert np.array_equal(plus.boundary, cfg.boundary)
    assert np.array_equal(minus.boundary, cfg.boundary)


def test_apply_preserves_hard_core(params32, equilibrium32):
    for cfg in equilibrium32:
        tr = hs.build_forward(cfg, params32, check=False)
        assert hs.check_hard_core(hs.apply_shift(cfg, tr, +1)) == []
        assert hs.check_hard_core(hs.apply_shift(cfg, tr, -1)) == []


def test_shift_monotonicity_and_bounds(params32, equilibrium32):
    for cfg in equilibrium32:
        tr = hs.build_forward(cfg, params32, check=False)
        assert np.all(np.diff(tr.shifts) >= 0.0)
        assert tr.shifts[0] >= 0.0
        assert np.all(np.abs(tr.derivs) <= params32.delta)
        assert np.all(tr.shifts <= params32.target_shift + 1e-15)


def test_attained_values_stable_under_later_constraints(params32, equilibrium32):
    # re-evaluating the final envelope at each selected particle returns
    # exactly the recorded shift
    cfg = equilibrium32[1]
    tr = hs.build_forward(cfg, params32, check=False)
    state = transform.profile_state_from_trace(cfg, params32, tr)
    for k in range(tr.size):
        x = cfg.interior[tr.order[k]]
        assert state.value_at(x) == tr.shifts[k]


def test_pairwise_lipschitz(params32, equilibrium32):
    cfg = equilibrium32[2]
    tr = hs.build_forward(cfg, params32, check=False)
    shifts = tr.shift_by_particle()
    pts = cfg.interior
    dx = pts[:, 0][:, None] - pts[:, 0][None, :]
    dy = pts[:, 1][:, None] - pts[:, 1][None, :]
    dist = np.sqrt(dx * dx + dy * dy)
    lhs = np.abs(shifts[:, None] - shifts[None, :])
    assert np.all(lhs <= params32.delta * dist + 1e-12)


def test_roundtrip_both_directions(params32, equilibrium32):
    cfg = equilibrium32[3]
    tr = hs.build_forward(cfg, params32, check=False)
    image = hs.apply_shift(cfg, tr, +1)
    back = hs.invert(image, params32)
    assert np.max(np.abs(back.interior - cfg.interior)) <= 1e-9
    # inverse first, then forward
    pre = hs.invert(cfg, params32)
    tr2 = hs.build_forward(pre, params32, check=False)
    again = hs.apply_shift(pre, tr2, +1)
    assert np.max(np.abs(again.interior - cfg.interior)) <= 1e-9


def test_roundtrip_on_random_configs():
    params = hs.derive_params(32, 0.5, 0.5)
    rng = np.random.default_rng(17)
    for trial in range(100):
        cfg = random_hardcore_config(32, int(rng.integers(0, 60)), rng)
        tr = hs.build_forward(cfg, params)
        image = hs.apply_shift(cfg, tr, +1)
        back = hs.invert(image, params)
        if cfg.count:
            assert np.max(np.abs(back.interior - cfg.interior)) <= 1e-9


def test_invert_empty(params32):
    out = hs.invert(_empty(32), params32)
    assert out.count == 0


def test_reconstruction_matches_forward_enumeration(params32, equilibrium32):
    cfg = equilibrium32[4]
    tr = hs.build_forward(cfg, params32, check=False)
    image = hs.apply_shift(cfg, tr, +1)
    _, order, taus = transform.build_inverse(image, params32)
    assert np.array_equal(order, tr.order)
    assert np.max(np.abs(taus - tr.shifts)) <= 1e-11


def test_solve_shear_inverse_identity_and_constant(params32):
    state = ShiftProfileState(params32)
    # t == 0 far outside the box profile support
    y = transform.solve_shear_inverse(state, (40.0, 0.0))
    assert abs(y[0] - 40.0) <= 1e-12
    # flat plateau: t == target everywhere near the center
    y = transform.solve_shear_inverse(state, (2.0, 1.0))
    assert abs(y[0] - (2.0 - params32.target_shift)) <= 1e-12


def test_solve_shear_inverse_residual(params32):
    rng = np.random.default_rng(23)
    state = ShiftProfileState(params32)
    for _ in range(12):
        c = rng.uniform(-30, 30, size=2)
        state.add_slowdown(make_slowdown(c, float(rng.uniform(0, 0.03)), params32))
    for _ in range(300):
        target = rng.uniform(-31, 31, size=2)
        y = transform.solve_shear_inverse(state, target)
        assert abs(y[0] + state.value_at(y) - target[0]) <= 1e-12
        assert y[1] == target[1]


def test_influence_chain_isolated(p256):
    cfg = hs.Configuration(n=256, interior=[[0.0, 0.0]], boundary=[])
    tr = hs.build_forward(cfg, p256)
    chains = transform.influence_chains(tr)
    assert chains[0].root == "self"
    assert chains[0].chain == [1]
    assert chains[0].ancestor == 0


def test_influence_chain_pair(p256):
    # outer particle picked first (smaller base value), inner one slowed by it
    a = (150.0, 0.0)
    b = (150.0 - 1.02, 0.0)
    cfg = hs.Configuration(n=256, interior=[a, b], boundary=[])
    tr = hs.build_forward(cfg, p256)
    assert tuple(cfg.interior[tr.order[0]]) == a
    chains = transform.influence_chains(tr)
    assert chains[1].root == "interior"
    assert chains[1].chain == [2, 1]
    assert chains[1].ancestor == int(tr.order[0])
    d = hs.euclid(a, b)
    assert d <= p256.one_plus_eps


def test_influence_chain_boundary_root(params32):
    # interior particle inside the boundary particle's cone support
    bnd = [[32.5, 0.0]]
    cfg = hs.Configuration(n=32, interior=[[31.48, 0.0]], boundary=bnd)
    assert hs.check_hard_core(cfg) == []
    tr = hs.build_forward(cfg, params32)
    assert tr.active[0] == 0
    chains = transform.influence_chains(tr)
    assert chains[0].root == "boundary"


def test_density_values(params32, equilibrium32):
    tr = hs.build_forward(_empty(32), params32)
    assert transform.density(tr, +1) == 1.0
    assert transform.density(tr, -1) == 1.0
    cfg = equilibrium32[0]
    tr = hs.build_forward(cfg, params32, check=False)
    assert transform.density(tr, +1) == tr.phi
    assert transform.density(tr, -1) == tr.phi_bar
    assert tr.phi > 0 and tr.phi_bar > 0
    # log identity: sum log1p(-d^2)
    want = sum(math.log1p(-float(d) ** 2) for d in tr.derivs)
    assert abs(transform.log_phi_phibar(tr) - want) < 1e-12


def test_heap_equals_naive_on_random_configs():
    params = hs.derive_params(16, 0.5, 0.5)
    rng = np.random.default_rng(31)
    for trial in range(20):
        cfg = random_hardcore_config(16, int(rng.integers(0, 40)), rng)
        th = hs.build_forward(cfg, params, method="heap")
        tn = hs.build_forward(cfg, params, method="naive")
        assert np.array_equal(th.order, tn.order)
        assert np.array_equal(th.shifts, tn.shifts)
        assert np.array_equal(th.active, tn.active)
        assert np.array_equal(th.derivs, tn.derivs)
        assert th.m_prime == tn.m_prime


def test_heap_equals_naive_with_boundary(params32, boundary32):
    rng = np.random.default_rng(33)
    for trial in range(10):
        cfg0 = random_hardcore_config(32, 40, rng)
        cfg = hs.Configuration(n=32, interior=cfg0.interior, boundary=boundary32)
        if hs.check_hard_core(cfg):
            continue
        th = hs.build_forward(cfg, params32, method="heap")
        tn = hs.build_forward(cfg, params32, method="naive")
        assert np.array_equal(th.order, tn.order)
        assert np.array_equal(th.shifts, tn.shifts)
        assert np.array_equal(th.active, tn.active)
        assert np.array_equal(th.derivs, tn.derivs)


def test_proviso_trace_and_flattening():
    # a near-hard-core chain from the box edge into the plateau drags a
    # small shift value deep inside, forcing the proviso partway through
    params = hs.derive_params(16, 0.5, 0.5)
    spacing = 1.0 + params.epsilon / 16.0
    xs = np.arange(15.0, 4.0, -spacing)
    cfg = hs.Configuration(n=16, interior=[[x, 0.0] for x in xs], boundary=[])
    tr = hs.build_forward(cfg, params)
    assert tr.m_prime <= tr.size
    # after the first flattening all remaining shifts are identical
    k = tr.m_prime
    tail = tr.shifts[k:]
    assert np.all(tail == tr.shifts[k - 1]) or tail.size == 0
    th = hs.build_forward(cfg, params, method="naive")
    assert np.array_equal(th.shifts, tr.shifts)
    assert th.m_prime == tr.m_prime
    # round trip still exact: bijectivity does not need good configurations
    image = hs.apply_shift(cfg, tr, +1)
    back = hs.invert(image, params)
    assert np.max(np.abs(back.interior - cfg.interior)) <= 1e-9


def test_trace_jsonl_format(params32, equilibrium32):
    import json
    cfg = equilibrium32[0]
    tr = hs.build_forward(cfg, params32, check=False)
    lines = transform.trace_to_jsonl(cfg, tr).strip().split("\n")
    assert len(lines) == tr.size
    rec = json.loads(lines[0])
    assert set(rec) == {"k", "P", "tau", "active", "deriv"}
    assert rec["k"] == 1
    assert rec["tau"] == tr.shifts[0]


def test_apply_rejects_bad_direction(params32, equilibrium32):
    tr = hs.build_forward(equilibrium32[0], params32, check=False)
    with pytest.raises(ValueError):
        hs.apply_shift(equilibrium32[0], tr, 0)
