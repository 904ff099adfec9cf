import numpy as np
import pytest

import hardshift as hs


@pytest.fixture(scope="session")
def params32():
    return hs.derive_params(32, 0.5, 0.5)


@pytest.fixture(scope="session")
def params256():
    return hs.derive_params(256, 0.5, 0.5)


@pytest.fixture(scope="session")
def boundary32():
    return hs.boundary_triangular(32, 2.0)


@pytest.fixture(scope="session")
def equilibrium32(params32, boundary32):
    """A handful of equilibrated configurations shared by unit tests."""
    return hs.sample(params32, boundary32, burn_in_sweeps=400, n_samples=5,
                     thin_sweeps=3, seed=20240801)


def random_hardcore_config(n, count, rng, lo=None, hi=None, min_dist=1.02,
                           boundary=None):
    """Dart-throwing generator for hard-core test configurations."""
    lo = -n if lo is None else lo
    hi = n if hi is None else hi
    pts = []
    tries = 0
    while len(pts) < count:
        tries += 1
        if tries > 200 * count + 1000:
            raise RuntimeError("dart throwing failed; lower the density")
        cand = rng.uniform(lo, hi, size=2)
        if all((cand[0] - p[0]) ** 2 + (cand[1] - p[1]) ** 2 >= min_dist ** 2
               for p in pts):
            pts.append(cand)
    interior = np.array(pts).reshape(-1, 2)
    boundary = np.empty((0, 2)) if boundary is None else boundary
    return hs.Configuration(n=n, interior=interior, boundary=boundary)
