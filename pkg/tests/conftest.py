import numpy as np
import pytest

from simfield.fields import make_field
from simfield.probes import make_matrices


def random_field(rng: np.random.Generator, n: int):
    """A random valid similarity field: uniform values, unit diagonal."""
    values = rng.uniform(0.0, 1.0, (n, n))
    np.fill_diagonal(values, 1.0)
    labels = [f"e{i}" for i in range(n)]
    return make_field(labels, values)


def random_matrices(rng: np.random.Generator, n: int, counts: float = 11.0):
    """Random antisymmetric win-rate matrix with constant counts."""
    upper = rng.uniform(0.05, 0.95, (n, n))
    P = np.triu(upper, 1)
    P = P + np.triu(1.0 - upper, 1).T
    np.fill_diagonal(P, 0.0)
    C = np.full((n, n), counts)
    np.fill_diagonal(C, 0.0)
    brands = tuple(f"b{i}" for i in range(n))
    return make_matrices(brands, P, C)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
