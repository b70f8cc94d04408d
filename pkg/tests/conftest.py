import numpy as np
import pytest

from services.grassmann import Subspace, coordinate_subspace
from services.substrate import Tolerances


def span(*columns):
    """Subspace spanned by the given vectors (each a sequence of numbers)."""
    A = np.array(columns, dtype=np.complex128).T
    return Subspace.from_columns(A)


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def e1():
    return coordinate_subspace(2, [0])


@pytest.fixture
def e2():
    return coordinate_subspace(2, [1])


@pytest.fixture
def diagonal():
    """span((1, 1)/√2) in C^2."""
    return span([1, 1])
