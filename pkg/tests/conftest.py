import numpy as np
import pytest

from carma_spectral import CarmaSpec


def make_stable_spec(rng, p_max=4, sigma2_range=(0.25, 4.0)):
    """Random stable CARMA spec: roots drawn with Re < -0.1, coefficients recovered."""
    p = int(rng.integers(1, p_max + 1))
    n_pairs = int(rng.integers(0, p // 2 + 1))
    roots = []
    for _ in range(n_pairs):
        re = -rng.uniform(0.1, 3.0)
        im = rng.uniform(0.1, 3.0)
        roots.extend([complex(re, im), complex(re, -im)])
    while len(roots) < p:
        roots.append(complex(-rng.uniform(0.1, 3.0), 0.0))
    coeffs = np.atleast_1d(np.poly(np.array(roots)))
    a = tuple(float(c) for c in coeffs.real[1:])
    q = int(rng.integers(0, p))
    b = rng.uniform(-2.0, 2.0, size=q + 1)
    while abs(b[q]) < 0.1:
        b[q] = rng.uniform(-2.0, 2.0)
    sigma2 = float(rng.uniform(*sigma2_range))
    return CarmaSpec(a, tuple(float(x) for x in b), sigma2=sigma2)


@pytest.fixture
def spec_factory():
    return make_stable_spec


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
