import math

import numpy as np
import pytest

import hardshift as hs
from hardshift.grid import build_grid, neighbors_within

from _oracles import brute_neighbors


def test_max_norm_examples():
    assert hs.max_norm((3, -4)) == 4
    assert hs.max_norm((0, 0)) == 0
    assert hs.max_norm((-7.5, 2)) == 7.5


def test_max_norm_rejects_non_finite():
    with pytest.raises(ValueError):
        hs.max_norm((math.nan, 0.0))
    with pytest.raises(ValueError):
        hs.max_norm((0.0, math.inf))


def test_euclid_examples():
    assert hs.euclid((0, 0), (3, 4)) == 5
    assert hs.euclid((1, 1), (1, 1)) == 0
    assert hs.euclid((0, 0), (1, 1)) == math.sqrt(2)


def test_grid_single_point_within_radius():
    pts = [(0.0, 0.0), (5.0, 5.0), (0.4, 0.3)]
    g = build_grid(pts, cell_size=1.0)
    assert neighbors_within(g, (0.1, 0.1), 1.0) == brute_neighbors(pts, (0.1, 0.1), 1.0)
    assert neighbors_within(g, (0.1, 0.1), 1.0) == [0, 2]


def test_grid_empty():
    g = build_grid(np.empty((0, 2)), cell_size=2.0)
    assert neighbors_within(g, (0.0, 0.0), 1.5) == []


def test_grid_point_on_exact_radius_included():
    g = build_grid([(2.0, 0.0)], cell_size=2.0)
    assert neighbors_within(g, (0.0, 0.0), 2.0) == [0]


def test_grid_radius_above_cell_size_rejected():
    g = build_grid([(0.0, 0.0)], cell_size=1.0)
    with pytest.raises(ValueError):
        neighbors_within(g, (0.0, 0.0), 1.5)


def test_grid_matches_brute_force_on_random_sets():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        m = int(rng.integers(0, 40))
        pts = rng.uniform(-8, 8, size=(m, 2))
        cell = float(rng.uniform(0.5, 3.0))
        r = cell * float(rng.uniform(0.1, 1.0))
        g = build_grid(pts, cell)
        q = rng.uniform(-9, 9, size=2)
        assert neighbors_within(g, q, r) == brute_neighbors(pts, q, r)


def test_check_hard_core_invariance():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-5, 5, size=(25, 2))
    cfg = hs.Configuration(n=8, interior=pts, boundary=np.empty((0, 2)))
    base = set(hs.check_hard_core(cfg))

    perm = rng.permutation(25)
    cfg_p = hs.Configuration(n=8, interior=pts[perm], boundary=np.empty((0, 2)))
    remap = {int(p): i for i, p in enumerate(perm)}
    assert {tuple(sorted((remap[a], remap[b]))) for a, b in base} \
        == set(hs.check_hard_core(cfg_p))

    shift = np.array([1.25, -0.75])
    cfg_t = hs.Configuration(n=8, interior=pts + shift, boundary=np.empty((0, 2)))
    assert set(hs.check_hard_core(cfg_t)) == base
