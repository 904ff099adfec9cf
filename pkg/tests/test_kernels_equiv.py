"""Compiled extension vs pure-Python fallback: bit-identical behavior."""

import numpy as np
import pytest

import hardshift as hs
from hardshift.backend import get_kernels

from conftest import random_hardcore_config

compiled = pytest.importorskip("hardshift._kernels")
fallback = get_kernels("fallback")


def test_backend_flags():
    assert compiled.COMPILED is True
    assert fallback.COMPILED is False


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_forward_identical(seed, params32, boundary32):
    rng = np.random.default_rng(seed)
    cfg0 = random_hardcore_config(32, 120, rng)
    cfg = hs.Configuration(n=32, interior=cfg0.interior, boundary=boundary32)
    a = compiled.forward_heap(cfg.interior, cfg.boundary, params32)
    b = fallback.forward_heap(cfg.interior, cfg.boundary, params32)
    for x, y in zip(a[:4], b[:4]):
        assert np.array_equal(x, y)
    assert a[4] == b[4]


@pytest.mark.parametrize("seed", [4, 5])
def test_inverse_identical(seed, params32, boundary32):
    rng = np.random.default_rng(seed)
    cfg0 = random_hardcore_config(32, 100, rng)
    cfg = hs.Configuration(n=32, interior=cfg0.interior, boundary=boundary32)
    tr = hs.build_forward(cfg, params32, check=False)
    image = hs.apply_shift(cfg, tr, +1)
    a = compiled.inverse_build(image.interior, image.boundary, params32)
    b = fallback.inverse_build(image.interior, image.boundary, params32)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("seed", [6, 7])
def test_mcmc_trajectories_identical(seed, boundary32):
    near = boundary32[np.max(np.abs(boundary32), axis=1) <= 33.0]
    near = np.ascontiguousarray(near)
    out = []
    for kern in (compiled, fallback):
        pos = np.empty((4000, 2))
        stats = np.zeros(6, dtype=np.int64)
        rng = np.random.Generator(np.random.PCG64(seed))
        cnt = 0
        for chunk in (2000, 30000, 30000):
            cnt = kern.run_steps(pos, cnt, 32.0, 0.5, near, chunk, rng, stats)
        out.append((cnt, pos[:cnt].copy(), stats.copy()))
    assert out[0][0] == out[1][0]
    assert np.array_equal(out[0][1], out[1][1])
    assert np.array_equal(out[0][2], out[1][2])


def test_proviso_path_identical():
    params = hs.derive_params(16, 0.5, 0.5)
    spacing = 1.0 + params.epsilon / 16.0
    xs = np.arange(15.0, 4.0, -spacing)
    interior = np.array([[x, 0.0] for x in xs])
    empty = np.empty((0, 2))
    a = compiled.forward_heap(interior, empty, params)
    b = fallback.forward_heap(interior, empty, params)
    for x, y in zip(a[:4], b[:4]):
        assert np.array_equal(x, y)
    assert a[4] == b[4] and a[4] <= interior.shape[0]
    # inverse across the flattened region
    shifted = interior.copy()
    shifted[a[0], 0] += a[1]
    ia = compiled.inverse_build(shifted, empty, params)
    ib = fallback.inverse_build(shifted, empty, params)
    for x, y in zip(ia, ib):
        assert np.array_equal(x, y)


def test_force_fallback_env(monkeypatch):
    import importlib

    import hardshift.backend as bk
    monkeypatch.setenv("HARDSHIFT_FORCE_FALLBACK", "1")
    importlib.reload(bk)
    assert bk.backend_name() == "fallback"
    monkeypatch.delenv("HARDSHIFT_FORCE_FALLBACK")
    importlib.reload(bk)
    assert bk.backend_name() == "compiled"
