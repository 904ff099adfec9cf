import math

import numpy as np
import pytest

import hardshift as hs
from hardshift.profile import (BASE_ID, ShiftProfileState, base_derivative_e1,
                               make_slowdown, slowdown_value, tau_n)


@pytest.fixture(scope="module")
def p256():
    return hs.derive_params(256, 1.0, 0.5)


def test_tau_zero_at_box_edge(p256):
    assert tau_n(256.0, p256) == 0.0
    assert tau_n(300.0, p256) == 0.0


def test_tau_continuous_at_plateau_edge(p256):
    s = p256.n_two_thirds
    flat = tau_n(s, p256)
    assert flat == p256.target_shift
    # middle-branch expression agrees at the breakpoint
    mid = p256.mid_coef * (p256.log_n - math.log(s))
    assert abs(mid - flat) < 1e-15
    assert tau_n(s + 1e-9, p256) <= flat


def test_tau_middle_branch_value(p256):
    # direct evaluation of the ramp at s=100 (n=256, delta=0.5, eps=1/48)
    assert abs(tau_n(100.0, p256) - 0.012474510266652828) < 1e-15


def test_tau_negative_argument_uses_flat_branch(p256):
    assert tau_n(-3.0, p256) == p256.target_shift


def test_tau_monotone_decreasing(p256):
    s = np.linspace(0, 300, 4000)
    v = np.array([tau_n(x, p256) for x in s])
    assert np.all(np.diff(v) <= 1e-15)


def test_make_slowdown_zero_height(p256):
    p = (150.0, 3.0)
    t = tau_n(hs.max_norm(p) - 1.0 - p256.epsilon, p256)
    sd = make_slowdown(p, t, p256)
    assert sd.height == 0.0
    assert not sd.flattened


def test_boundary_slowdown_never_flattened(p256):
    # just outside the box: the headroom stays below the proviso threshold
    for off in (0.001, 0.3, 1.0, 2.0):
        sd = make_slowdown((p256.n + off, 5.0), 0.0, p256)
        assert sd.height <= p256.delta_eps
        assert not sd.flattened
    # and for the smallest admissible boxes too
    p8 = hs.derive_params(8, 1.0, 0.5)
    sd = make_slowdown((8.3, 0.0), 0.0, p8)
    assert not sd.flattened


def test_center_slowdown_flattened(p256):
    sd = make_slowdown((p256.n_two_thirds / 2.0, 0.0), 0.0, p256)
    assert sd.height == p256.target_shift
    assert sd.height > p256.delta_eps
    assert sd.flattened


def test_slowdown_piecewise_values(p256):
    center = (100.0, 0.0)
    t = 0.005
    sd = make_slowdown(center, t, p256)
    assert not sd.flattened
    assert slowdown_value(sd, (100.5, 0.0), p256) == t
    assert slowdown_value(sd, (101.0, 0.0), p256) == t
    ramp = slowdown_value(sd, (101.0 + p256.epsilon / 2, 0.0), p256)
    assert abs(ramp - (t + sd.height / 2.0)) < 1e-14
    assert slowdown_value(sd, (101.0 + 2 * p256.epsilon, 0.0), p256) == math.inf


def test_envelope_flat_region_no_constraints(p256):
    st = ShiftProfileState(p256)
    v, act = st.envelope_eval((1.0, 2.0))
    assert v == p256.target_shift and act == BASE_ID


def test_envelope_at_slowdown_center(p256):
    st = ShiftProfileState(p256)
    c = (120.0, 4.0)
    st.add_slowdown(make_slowdown(c, 0.004, p256))
    v, act = st.envelope_eval(c)
    assert v == min(tau_n(hs.max_norm(c), p256), 0.004)
    assert act == 0


def test_envelope_outside_supports_is_base(p256):
    st = ShiftProfileState(p256)
    st.add_slowdown(make_slowdown((120.0, 4.0), 0.004, p256))
    x = (120.0 + 5.0, 4.0)
    v, act = st.envelope_eval(x)
    assert act == BASE_ID
    assert v == tau_n(hs.max_norm(x), p256)


def test_derivative_flat_zero(p256):
    st = ShiftProfileState(p256)
    assert st.derivative_e1((0.5, 0.5)) == 0.0


def test_derivative_on_ramp_right_of_center(p256):
    st = ShiftProfileState(p256)
    c = (150.0, 0.0)
    st.add_slowdown(make_slowdown(c, 0.001, p256))
    x = (150.0 + 1.0 + p256.epsilon / 2, 0.0)
    sd = st.slowdowns[0]
    got = st.derivative_e1(x)
    assert abs(got - sd.height / p256.epsilon) < 1e-12


def test_derivative_base_middle_branch(p256):
    st = ShiftProfileState(p256)
    s = 120.0
    got = st.derivative_e1((s, 0.0))
    want = -3.0 * 0.5 * p256.epsilon / (math.sqrt(p256.log_n) * s)
    assert abs(got - want) < 1e-15
    assert base_derivative_e1((-s, 0.0), p256) == -got


def _random_state(rng, params, n_slow=10):
    st = ShiftProfileState(params)
    for _ in range(n_slow):
        c = rng.uniform(-params.n, params.n, size=2)
        t = float(rng.uniform(0, params.target_shift))
        st.add_slowdown(make_slowdown(c, t, params))
    return st


def test_envelope_lipschitz_property(p256):
    rng = np.random.default_rng(5)
    st = _random_state(rng, p256, n_slow=40)
    pts = rng.uniform(-p256.n - 2, p256.n + 2, size=(100_000, 2))
    pairs = pts.reshape(-1, 2, 2)
    for a, b in pairs:
        va = st.value_at(a)
        vb = st.value_at(b)
        assert abs(va - vb) <= p256.delta * hs.euclid(a, b) + 1e-12


def test_envelope_monotone_accumulation(p256):
    rng = np.random.default_rng(6)
    st = ShiftProfileState(p256)
    probes = rng.uniform(-p256.n, p256.n, size=(200, 2))
    vals = np.array([st.value_at(q) for q in probes])
    for _ in range(25):
        c = rng.uniform(-p256.n, p256.n, size=2)
        st.add_slowdown(make_slowdown(c, float(rng.uniform(0, 0.03)), p256))
        new = np.array([st.value_at(q) for q in probes])
        assert np.all(new <= vals)
        vals = new


def test_envelope_grid_matches_brute_force(p256):
    rng = np.random.default_rng(8)
    for _ in range(1000):
        st = _random_state(rng, p256, n_slow=int(rng.integers(0, 12)))
        for _ in range(3):
            q = rng.uniform(-p256.n - 1, p256.n + 1, size=2)
            assert st.envelope_eval(q) == st.evaluate_brute(q)


def test_derivative_matches_finite_differences(p256):
    rng = np.random.default_rng(9)
    st = _random_state(rng, p256, n_slow=25)
    h = 1e-6
    checked = 0
    for _ in range(2000):
        if checked >= 400:
            break
        x = rng.uniform(-p256.n, p256.n, size=2)
        if _near_switch_locus(st, x, 1e-4):
            continue
        checked += 1
        got = st.derivative_e1(x)
        fd = (st.value_at((x[0] + h, x[1])) - st.value_at((x[0] - h, x[1]))) / (2 * h)
        assert abs(got - fd) <= 1e-5, (x, got, fd)
    assert checked >= 200


def _near_switch_locus(st, x, tol):
    params = st.params
    s = hs.max_norm(x)
    if abs(s - params.n_two_thirds) < tol or abs(s - params.n) < tol:
        return True
    if abs(abs(x[0]) - abs(x[1])) < tol:
        return True
    vals = [tau_n(s, params)]
    for sd in st.slowdowns:
        d = hs.euclid(x, sd.center)
        if not sd.flattened and (abs(d - 1.0) < tol
                                 or abs(d - params.one_plus_eps) < tol):
            return True
        v = slowdown_value(sd, x, params)
        if math.isfinite(v):
            vals.append(v)
    vals.sort()
    return len(vals) >= 2 and vals[1] - vals[0] < tol


def test_make_slowdown_rejects_negative_shift(p256):
    with pytest.raises(ValueError):
        make_slowdown((0.0, 0.0), -0.1, p256)
