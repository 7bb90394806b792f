import numpy as np
import pytest

from pmeilrma.model import IlrmaState
from pmeilrma.tensors import SourceModel


def random_model(rng, I, J, L, N, spread=1.0):
    """Log-uniform factors spanning ``10**(+-spread)``."""
    T = 10.0 ** rng.uniform(-spread, spread, size=(I, L, N))
    V = 10.0 ** rng.uniform(-spread, spread, size=(L, J, N))
    return SourceModel(T, V)


def random_state(rng, I=4, J=5, L=3, N=2, spread=1.0):
    X = rng.standard_normal((I, J, N)) + 1j * rng.standard_normal((I, J, N))
    W = np.eye(N) + 0.3 * (rng.standard_normal((I, N, N)) + 1j * rng.standard_normal((I, N, N)))
    return IlrmaState(W=W, model=random_model(rng, I, J, L, N, spread), X=X)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
