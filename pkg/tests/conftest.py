import numpy as np
import pytest
from hypothesis import strategies as st

from plirisk.space import FiniteSpace


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid22():
    """Uniform 2x2 space with X = [[1, 3], [5, 7]]."""
    return FiniteSpace.uniform(2, 2), np.array([[1.0, 3.0], [5.0, 7.0]])


@st.composite
def spaces_and_fields(draw, max_m=5, max_n=5, count=1):
    M = draw(st.integers(1, max_m))
    N = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    space = FiniteSpace.random(M, N, rng)
    fields = [rng.normal(scale=draw(st.floats(0.1, 10.0)), size=(M, N)) for _ in range(count)]
    if draw(st.booleans()):
        fields = [np.round(f) for f in fields]
    return space, fields
