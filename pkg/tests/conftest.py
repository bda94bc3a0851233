import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fejercert import load_instance
from fejercert.mixer import external_envelope

settings.register_profile(
    "repro",
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("repro")


def random_instance(rng, n=None, m=None, emax=8, cap=4096):
    """Seeded random instance with integer energies in [0, emax]."""
    n = int(rng.integers(2, 4)) if n is None else n
    m = int(rng.integers(2, 4)) if m is None else m
    energy = rng.integers(0, emax + 1, size=n**m)
    return load_instance(
        {"n": n, "m": m, "energy": [int(e) for e in energy]}, cap=cap
    )


def random_envelope(rng, size):
    """Strictly positive random distribution (Dirichlet weights)."""
    return external_envelope(rng.dirichlet(np.ones(size)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
