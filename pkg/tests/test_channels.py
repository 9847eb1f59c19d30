import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qotp.channels import (
    Isometry,
    QuantumChannel,
    apply_channel,
    apply_isometry,
    clock,
    controlled_isometry,
    depolarizing_channel,
    haar_unitary,
    identity_channel,
    shift,
    symmetric_erasure_isometry,
    symmetric_side_channel,
    symmetrize_isometry,
    weyl_set,
)
from qotp.errors import BadDimension, NotCPTP, NotSymmetric, NotUnitary, ShapeError
from qotp.linalg import DensityMatrix, PureState, RegisterLayout, is_unitary, partial_trace
from qotp.states import random_density, random_pure

from conftest import assert_valid_state

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def _equal_up_to_phase(u, v, tol=1e-12):
    overlap = np.vdot(v.ravel(), u.ravel())
    if abs(overlap) < 1e-9:
        return False
    return np.allclose(u, v * overlap / abs(overlap), atol=tol)


# --- Weyl operators -----------------------------------------------------------------


def test_weyl_d2_is_pauli_set_up_to_phase():
    ws = weyl_set(2)
    expected = [np.eye(2), SZ, SX, SX @ SZ]
    assert len(ws) == 4
    for w, e in zip(ws, expected):
        assert _equal_up_to_phase(w, e)
    sy = np.array([[0, -1j], [1j, 0]])
    assert _equal_up_to_phase(ws.op(1, 1), sy)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 8])
def test_weyl_unitary_and_trace_orthogonal(d):
    ws = weyl_set(d)
    assert len(ws) == d * d
    assert np.array_equal(ws.op(0, 0), np.eye(d))
    for w in ws:
        assert np.linalg.norm(w.conj().T @ w - np.eye(d)) <= 1e-12
    gram = np.array([[np.trace(w1.conj().T @ w2) for w2 in ws] for w1 in ws])
    assert np.max(np.abs(gram - d * np.eye(d * d))) <= 1e-10


def test_weyl_convention():
    d = 3
    x, z = shift(d), clock(d)
    assert np.allclose(x @ np.eye(d)[:, 0], np.eye(d)[:, 1])
    assert np.allclose(np.diag(z), np.exp(2j * np.pi * np.arange(d) / d))
    assert np.allclose(weyl_set(d).op(2, 1), x @ x @ z)


@pytest.mark.parametrize("d", [0, 1, -3])
def test_weyl_rejects_small_dimension(d):
    with pytest.raises(BadDimension):
        weyl_set(d)


@pytest.mark.parametrize("d", [2, 3, 4, 8])
def test_exact_weyl_twirl(d):
    r = np.random.default_rng(d)
    ws = weyl_set(d)
    for _ in range(5):
        rho = random_density(RegisterLayout.of(A=d), r).matrix
        avg = sum(w @ rho @ w.conj().T for w in ws) / d**2
        assert np.max(np.abs(avg - np.eye(d) / d)) <= 1e-10


# --- Haar ---------------------------------------------------------------------------


def test_haar_d1_unit_modulus():
    u = haar_unitary(1, 5)
    assert u.shape == (1, 1)
    assert abs(abs(u[0, 0]) - 1) <= 1e-12


@pytest.mark.parametrize("d", [2, 3, 8])
def test_haar_unitary_and_deterministic(d):
    u = haar_unitary(d, 42)
    assert is_unitary(u)
    assert np.array_equal(u, haar_unitary(d, 42))
    assert not np.array_equal(u, haar_unitary(d, 43))


def test_haar_first_moment():
    r = np.random.default_rng(2024)
    vals = np.array([abs(haar_unitary(4, r)[0, 0]) ** 2 for _ in range(10_000)])
    assert abs(vals.mean() - 0.25) <= 0.01


def test_haar_left_invariance_of_moments():
    # E|U_00|^4 = 2/(d(d+1)); a fixed left multiplication must not move it
    d, n = 3, 6000
    r = np.random.default_rng(77)
    fixed = haar_unitary(d, 1)
    plain = np.array([abs(haar_unitary(d, r)[0, 0]) ** 4 for _ in range(n)])
    moved = np.array([abs((fixed @ haar_unitary(d, r))[0, 0]) ** 4 for _ in range(n)])
    target = 2 / (d * (d + 1))
    se = plain.std() / np.sqrt(n)
    assert abs(plain.mean() - target) <= 4 * se
    assert abs(moved.mean() - target) <= 4 * se


# --- channel representations --------------------------------------------------------


def test_from_kraus_checks_completeness():
    with pytest.raises(NotCPTP):
        QuantumChannel.from_kraus([np.eye(2) * 0.9])


def test_from_unitary_checks_unitarity():
    with pytest.raises(NotUnitary):
        QuantumChannel.from_unitary(np.array([[1, 1], [0, 1]], dtype=complex))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_kraus_and_stinespring_agree(seed):
    r = np.random.default_rng(seed)
    u = haar_unitary(6, r)
    # 2-dim input, 3-dim output, 2-dim env from the first two columns of a unitary
    iso = Isometry(u[:, :2], RegisterLayout.of(B=3, E=2))
    stine = QuantumChannel.from_stinespring(iso, "E")
    kraus = QuantumChannel.from_kraus(stine.kraus, output=RegisterLayout.of(B=3))
    back = QuantumChannel.from_stinespring(kraus.isometry, kraus.env_name)
    rho = random_density(RegisterLayout.of(A=2), r).matrix
    assert np.max(np.abs(stine.act(rho) - kraus.act(rho))) <= 1e-9
    assert np.max(np.abs(back.act(rho) - kraus.act(rho))) <= 1e-9
    assert np.max(np.abs(stine.choi() - kraus.choi())) <= 1e-9


def test_identity_channel_leaves_state(rng):
    rho = random_density(RegisterLayout.of(A=2, B=3), rng)
    out = apply_channel(identity_channel(3), rho, "B")
    assert out.layout == rho.layout
    assert np.allclose(out.matrix, rho.matrix, atol=1e-12)


def test_depolarizing_channel(rng):
    rho = random_density(RegisterLayout.of(A=2, B=3), rng)
    out = apply_channel(depolarizing_channel(2), rho, "A")
    assert_valid_state(out)
    assert np.allclose(out.reduced("A").matrix, np.eye(2) / 2, atol=1e-10)
    assert np.allclose(out.reduced("B").matrix, rho.reduced("B").matrix, atol=1e-10)
    assert np.allclose(out.matrix, np.kron(np.eye(2) / 2, rho.reduced("B").matrix), atol=1e-10)


def test_apply_channel_dimension_mismatch(rng):
    rho = random_density(RegisterLayout.of(A=2, B=3), rng)
    with pytest.raises(ShapeError):
        apply_channel(identity_channel(2), rho, "B")


def test_apply_channel_replaces_registers(rng):
    rho = random_density(RegisterLayout.of(R=2, A=2), rng)
    ch = QuantumChannel.from_stinespring(symmetric_erasure_isometry(2), "E")
    out = apply_channel(ch, rho, "A")
    assert out.layout.names == ("R", "B")
    assert out.layout.dim("B") == 3
    assert_valid_state(out)
    assert np.allclose(out.reduced("R").matrix, rho.reduced("R").matrix, atol=1e-10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_apply_channel_keeps_invariants(seed):
    r = np.random.default_rng(seed)
    rho = random_density(RegisterLayout.of(A=2, B=2), r)
    u = haar_unitary(4, r)
    ch = QuantumChannel.from_stinespring(Isometry(u[:, :2], RegisterLayout.of(Bo=2, Env=2)), "Env")
    assert_valid_state(apply_channel(ch, rho, "B"))


def test_apply_isometry_keeps_pure(rng):
    psi = random_pure(RegisterLayout.of(A=2, R=2), rng)
    out = apply_isometry(symmetric_erasure_isometry(2), psi, "A")
    assert isinstance(out, PureState)
    assert out.layout.names == ("B", "E", "R")
    assert abs(np.linalg.norm(out.amplitudes) - 1) <= 1e-12


# --- controlled isometries ----------------------------------------------------------


def _iso(m, name="A"):
    return Isometry(np.asarray(m, dtype=complex), RegisterLayout(((name, m.shape[0]),)))


def test_controlled_identity_blocks():
    v = controlled_isometry([_iso(np.eye(3))] * 2, "K")
    assert v.output.names == ("K", "A")
    assert np.allclose(v.matrix, np.eye(6))


def test_controlled_flip_makes_bell_state():
    v = controlled_isometry([_iso(np.eye(2)), _iso(SX)], "K")
    inp = np.kron(np.array([1, 1]) / np.sqrt(2), [1, 0])
    assert np.allclose(v.matrix @ inp, np.array([1, 0, 0, 1]) / np.sqrt(2))


@pytest.mark.parametrize("d", [2, 3])
def test_controlled_weyl_twirl(d, rng):
    ws = weyl_set(d)
    v = controlled_isometry([_iso(w) for w in ws], ("K", d * d))
    rho = random_density(RegisterLayout.of(A=d), rng)
    k_uniform = np.eye(d * d) / d**2
    full = v.matrix @ np.kron(k_uniform, rho.matrix) @ v.matrix.conj().T
    state = DensityMatrix(v.output, full)
    oracle = sum(w @ rho.matrix @ w.conj().T for w in ws) / d**2
    assert np.max(np.abs(partial_trace(state, "K").matrix - oracle)) <= 1e-10
    assert np.max(np.abs(oracle - np.eye(d) / d)) <= 1e-10


def test_controlled_isometry_rejects_mismatch():
    with pytest.raises(ShapeError):
        controlled_isometry([_iso(np.eye(2)), _iso(np.eye(3))], "K")
    with pytest.raises(ShapeError):
        controlled_isometry([_iso(np.eye(2))] * 2, ("K", 3))


# --- symmetric side channels --------------------------------------------------------


def _marginals_agree(iso, b, e, d_in):
    to_b = QuantumChannel.from_stinespring(iso, e)
    to_e = QuantumChannel.from_stinespring(iso, b)
    worst = 0.0
    # spanning set of operators: all matrix units
    for i in range(d_in):
        for j in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, j] = 1
            worst = max(worst, float(np.max(np.abs(to_b.act(unit) - to_e.act(unit)))))
    return worst


@pytest.mark.parametrize("d", [2, 3])
def test_erasure_isometry_accepted(d):
    iso = symmetric_erasure_isometry(d)
    ch = symmetric_side_channel(iso, "B", "E")
    assert ch.in_dim == d and ch.out_dim == d + 1
    assert _marginals_agree(iso, "B", "E", d) <= 1e-9
    # half the weight is erased
    out = ch.act(np.diag([1.0] + [0.0] * (d - 1)))
    assert out[d, d] == pytest.approx(0.5, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_symmetrized_random_isometry_accepted(seed):
    r = np.random.default_rng(seed)
    layout = RegisterLayout.of(B=2, E=2)
    v = haar_unitary(4, r)[:, :2]
    iso = symmetrize_isometry(v, layout, "B", "E")
    assert np.linalg.norm(iso.matrix.conj().T @ iso.matrix - np.eye(2)) <= 1e-10
    symmetric_side_channel(iso, "B", "E")
    assert _marginals_agree(iso, "B", "E", 2) <= 1e-9


def test_asymmetric_copy_rejected():
    layout = RegisterLayout.of(B=2, E=2)
    m = np.zeros((4, 2), dtype=complex)
    m[0, 0] = 1  # |0> -> |0>_B |0>_E
    m[2, 1] = 1  # |1> -> |1>_B |0>_E
    with pytest.raises(NotSymmetric):
        symmetric_side_channel(Isometry(m, layout), "B", "E")


def test_symmetric_channel_needs_equal_dims():
    iso = Isometry(np.eye(6)[:, :2].astype(complex), RegisterLayout.of(B=2, E=3))
    with pytest.raises(ShapeError):
        symmetric_side_channel(iso, "B", "E")


# --- serialization ------------------------------------------------------------------


def test_channel_json_round_trip():
    k = depolarizing_channel(2)
    k2 = QuantumChannel.from_json(k.to_json())
    s = QuantumChannel.from_stinespring(symmetric_erasure_isometry(2), "E")
    s2 = QuantumChannel.from_json(s.to_json())
    rho = np.array([[0.7, 0.2j], [-0.2j, 0.3]])
    assert np.array_equal(k.act(rho), k2.act(rho))
    assert np.array_equal(s.act(rho), s2.act(rho))
    assert k.to_json()["kind"] == "kraus"
    assert s.to_json()["kind"] == "stinespring"
