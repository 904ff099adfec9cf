import math

import pytest

from hardshift import derive_params


def test_epsilon_formula():
    p = derive_params(256, 1.0, 0.5)
    assert p.epsilon == 1.0 / 48.0
    # activity low enough for the 1/4 cap to win: 1/(48*0.01) = 2.083 > 1/4
    assert derive_params(256, 0.01, 0.5).epsilon == 0.25


def test_target_shift():
    p = derive_params(256, 1.0, 0.5)
    assert p.target_shift == 0.5 * (1.0 / 48.0) * math.sqrt(math.log(256))
    assert abs(p.target_shift - 0.024529375469072388) < 1e-15


def test_theorem_regime_flag():
    assert derive_params(256, 1.0, 0.5).theorem_regime
    assert derive_params(200, 1.0, 0.5).theorem_regime
    assert not derive_params(199, 1.0, 0.5).theorem_regime


def test_epsilon_monotone_in_z():
    zs = [0.01, 0.05, 0.2, 0.5, 1.0, 3.0, 10.0]
    eps = [derive_params(64, z, 0.25).epsilon for z in zs]
    assert all(a >= b for a, b in zip(eps, eps[1:]))


@pytest.mark.parametrize("n,z,delta", [
    (7, 1.0, 0.5),
    (8, 0.0, 0.5),
    (8, -1.0, 0.5),
    (8, 1.0, 0.0),
    (8, 1.0, 0.6),
    (8, 1.0, -0.1),
])
def test_invalid_inputs_rejected(n, z, delta):
    with pytest.raises(ValueError):
        derive_params(n, z, delta)


def test_derived_helpers_consistent():
    p = derive_params(32, 0.5, 0.5)
    assert p.one_plus_eps == 1.0 + p.epsilon
    assert p.delta_eps == p.delta * p.epsilon
    assert p.mid_coef == 3.0 * p.delta * p.epsilon / math.sqrt(math.log(32))
    assert p.n_two_thirds == 32.0 ** (2.0 / 3.0)
    assert p.flat_value == p.target_shift
