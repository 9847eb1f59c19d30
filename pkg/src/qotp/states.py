"""Frequently used states and random samplers."""

from __future__ import annotations

import numpy as np

from .linalg import DensityMatrix, PureState, RegisterLayout


def bell_state(a: str = "A", b: str = "B") -> PureState:
    return PureState.maximally_entangled(a, b, 2)


def ghz_state(names=("A", "B", "E"), d: int = 2) -> PureState:
    """``(1/sqrt d) sum_k |k k ... k>``."""
    layout = RegisterLayout(tuple((n, d) for n in names))
    v = np.zeros(layout.total_dim, dtype=complex)
    for k in range(d):
        v[np.ravel_multi_index((k,) * len(names), layout.dims)] = 1.0
    return PureState(layout, v / np.sqrt(d))


def with_trivial(state, *names: str):
    """Append dimension-1 registers (e.g. an uncorrelated, trivial Eve)."""
    extra = RegisterLayout(tuple((n, 1) for n in names))
    if isinstance(state, PureState):
        return PureState(state.layout.concat(extra), state.amplitudes)
    return DensityMatrix(state.layout.concat(extra), state.matrix)


def classically_correlated(a: str = "A", b: str = "B", d: int = 2) -> DensityMatrix:
    """``(1/d) sum_k |kk><kk|``."""
    layout = RegisterLayout(((a, d), (b, d)))
    m = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        m[k * d + k, k * d + k] = 1.0 / d
    return DensityMatrix(layout, m)


def werner_state(p: float, a: str = "A", b: str = "B") -> DensityMatrix:
    """``p Phi+ + (1-p) I/4`` on two qubits."""
    phi = bell_state(a, b).density().matrix
    return DensityMatrix(RegisterLayout(((a, 2), (b, 2))), p * phi + (1 - p) * np.eye(4) / 4)


def random_pure(layout: RegisterLayout, rng=None) -> PureState:
    rng = np.random.default_rng(rng)
    n = layout.total_dim
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(layout, v / np.linalg.norm(v))


def random_density(layout: RegisterLayout, rng=None, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix of the given rank (full by default)."""
    rng = np.random.default_rng(rng)
    n = layout.total_dim
    k = n if rank is None else rank
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(layout, m / np.trace(m).real)
