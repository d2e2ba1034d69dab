"""Random models and matrices shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from cjacobi import ExplicitTable
from cjacobi.transfer import TransferMatrix


def random_table(rng: np.random.Generator, length: int, spread: float = 0.5, real: bool = False):
    """Table with |a_n| in [0.5, 1.5] and moderate b_n, plus a_{-1}."""
    mod = 1.0 + spread * rng.uniform(-1, 1, length + 1)
    phase = np.zeros(length + 1) if real else rng.uniform(-np.pi, np.pi, length + 1)
    a = mod * np.exp(1j * phase)
    b = rng.normal(size=length) + (0 if real else 1j * rng.normal(size=length))
    return ExplicitTable(tuple(a[1:]), tuple(b), complex(a[0]))


def random_matrix(rng, real=False) -> TransferMatrix:
    m = rng.normal(size=(2, 2))
    if not real:
        m = m + 1j * rng.normal(size=(2, 2))
    return TransferMatrix.from_array(m)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
finite = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
