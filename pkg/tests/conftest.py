import numpy as np
import pytest

from qotp.linalg import DensityMatrix, PureState, RegisterLayout


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def assert_valid_state(rho: DensityMatrix):
    m = rho.matrix
    assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-10
    assert np.linalg.eigvalsh(m)[0] >= -1e-10


def bell_density(a="A", b="B"):
    return PureState.maximally_entangled(a, b, 2).density()


def one_qubit(name, digit):
    return DensityMatrix.basis(RegisterLayout(((name, 2),)), digit)
