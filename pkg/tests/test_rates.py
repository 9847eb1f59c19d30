import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qotp.channels import Isometry, QuantumChannel, depolarizing_channel, haar_unitary, identity_channel
from qotp.errors import PartitionError, ShapeError
from qotp.linalg import PureState, RegisterLayout, tensor
from qotp.rates import (
    ChannelAnsatz,
    CrossCheckBudget,
    OptimizerConfig,
    finite_difference_gradient,
    optimize_rate,
    _objective_from_isometry,
    _pure_tensor,
    parse_dims,
    rate_objective,
    sw_rate,
    theorem_cross_check,
)
from qotp.entropy import subsystem_entropy
from qotp.states import bell_state, ghz_state, random_density, random_pure, werner_state, with_trivial

BELL = with_trivial(bell_state(), "E")
GHZ = ghz_state()


def _product(seed=0):
    r = np.random.default_rng(seed)
    return with_trivial(tensor(random_pure(RegisterLayout.of(A=2), r), random_pure(RegisterLayout.of(B=2), r)), "E")


# --- ansatz -----------------------------------------------------------------------------


@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2, 1, 2), (2, 1, 2, 2), (3, 2, 2, 1), (2, 1, 1, 2)]))
@settings(max_examples=30, deadline=None)
def test_ansatz_is_isometry(seed, dims):
    in_dim, da, dal, den = dims
    ans = ChannelAnsatz(in_dim, da, dal, den)
    theta = np.random.default_rng(seed).standard_normal(ans.n_params) * 2
    v = ans.isometry_matrix(theta)
    assert v.shape == (da * dal * den, in_dim)
    assert np.linalg.norm(v.conj().T @ v - np.eye(in_dim)) <= 1e-9


def test_ansatz_defaults_and_validation():
    ans = ChannelAnsatz(2, 2, 1)
    assert ans.dim_env == 2 and ans.n_params == 16
    assert np.allclose(ans.isometry_matrix(), ans.reference())
    with pytest.raises(ShapeError):
        ChannelAnsatz(4, 1, 1, 1)
    with pytest.raises(ShapeError):
        ChannelAnsatz(2, 2, 1, parameters=np.zeros(3))


def test_ansatz_generator_is_hermitian(rng):
    ans = ChannelAnsatz(2, 2, 2, 1)
    h = ans.generator(rng.standard_normal(ans.n_params))
    assert np.allclose(h, h.conj().T)


# --- objective -------------------------------------------------------------------------


def test_bell_identity_channel_gives_one():
    assert rate_objective(BELL, ChannelAnsatz(2, 2, 1)) == pytest.approx(1.0, abs=1e-12)
    assert rate_objective(BELL, identity_channel(2)) == pytest.approx(1.0, abs=1e-12)


def test_depolarizing_gives_zero():
    assert rate_objective(BELL, depolarizing_channel(2)) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_ghz_objective_vanishes(seed):
    ans = ChannelAnsatz(2, 2, 2, 2)
    theta = np.random.default_rng(seed).standard_normal(ans.n_params)
    assert abs(rate_objective(GHZ, ans.with_parameters(theta))) <= 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_trivial_a_gives_exactly_zero(seed):
    r = np.random.default_rng(seed)
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), r)
    ans = ChannelAnsatz(2, 1, 2, 2)
    assert rate_objective(psi, ans.with_parameters(r.standard_normal(ans.n_params))) == 0.0


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
@settings(max_examples=20, deadline=None)
def test_identity_on_pure_ab_gives_entropy(seed, d):
    psi = with_trivial(random_pure(RegisterLayout.of(A=d, B=d), seed), "E")
    expected = subsystem_entropy(psi.density(), "A")
    assert rate_objective(psi, ChannelAnsatz(d, d, 1)) == pytest.approx(expected, abs=1e-9)
    assert rate_objective(psi, identity_channel(d)) == pytest.approx(expected, abs=1e-9)


def test_objective_with_stinespring_channel(rng):
    # a channel built from an isometry scores the same as that isometry
    u = haar_unitary(8, rng)[:, :2]
    iso = Isometry(u, RegisterLayout.of(a=2, alpha=2, env=2))
    ch = QuantumChannel.from_stinespring(iso, "env")
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), rng)
    direct = _objective_from_isometry(_pure_tensor(psi), u, (2, 2, 2))
    assert rate_objective(psi, ch) == pytest.approx(direct, abs=1e-10)


def test_objective_shape_errors():
    with pytest.raises(ShapeError):
        rate_objective(BELL, ChannelAnsatz(3, 3, 1))
    with pytest.raises(ShapeError):
        rate_objective(BELL, identity_channel(3))
    with pytest.raises(PartitionError):
        rate_objective(bell_state("X", "B"), identity_channel(2))


# --- gradient ----------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_fd_gradient_matches_secant(seed):
    r = np.random.default_rng(seed)
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), r)
    ans = ChannelAnsatz(2, 2, 1, 2)
    f = lambda th: rate_objective(psi, ans.with_parameters(th))
    theta = r.standard_normal(ans.n_params)
    g = finite_difference_gradient(f, theta, 1e-5)
    u = r.standard_normal(ans.n_params)
    u /= np.linalg.norm(u)
    eps = 1e-4
    secant = (f(theta + eps * u) - f(theta - eps * u)) / (2 * eps)
    assert abs(g @ u - secant) <= 1e-4 * max(abs(secant), 1e-3)


def test_fd_gradient_of_quadratic():
    g = finite_difference_gradient(lambda x: -np.sum((x - 1) ** 2), np.zeros(3))
    assert np.allclose(g, 2.0, atol=1e-8)


# --- optimizer ---------------------------------------------------------------------------


def test_optimize_bell():
    t0 = time.perf_counter()
    res = optimize_rate(BELL, [(2, 1)], restarts=5, seed=0)
    assert time.perf_counter() - t0 < 60
    assert 0.99 <= res.value <= 1.0 + 1e-6
    assert res.restarts == 5
    assert res.dims_swept == [(2, 1)]


@pytest.mark.parametrize("psi", [GHZ, _product()], ids=["ghz", "product"])
def test_optimize_no_rate(psi):
    t0 = time.perf_counter()
    res = optimize_rate(psi, [(2, 1)], restarts=5, seed=0)
    assert time.perf_counter() - t0 < 60
    assert res.value <= 1e-6


def test_result_reevaluates(rng):
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), rng)
    res = optimize_rate(psi, [(2, 1), (2, 2)], restarts=2, seed=3, config=OptimizerConfig(max_iter=60))
    again = rate_objective(psi, res.ansatz(2))
    assert again == pytest.approx(res.value, abs=1e-9)
    assert len(res.per_dim) == 2
    assert res.value == max(p["value"] for p in res.per_dim)
    assert res.history[-1] == res.value


def test_more_restarts_never_hurt(rng):
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), rng)
    cfg = OptimizerConfig(max_iter=40)
    values = [optimize_rate(psi, [(2, 1)], restarts=k, seed=11, config=cfg).value for k in (1, 2, 4)]
    assert values[0] <= values[1] <= values[2]


def test_never_below_identity(rng):
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), rng)
    dims = [(2, 1), (2, 2)]
    res = optimize_rate(psi, dims, restarts=1, seed=0, config=OptimizerConfig(max_iter=20))
    floor = max(rate_objective(psi, ChannelAnsatz(2, da, dal)) for da, dal in dims)
    assert res.value >= floor - 1e-9


def test_threaded_restarts_match_serial(rng):
    psi = random_pure(RegisterLayout.of(A=2, B=2, E=2), rng)
    a = optimize_rate(psi, [(2, 1)], restarts=3, seed=5, config=OptimizerConfig(max_iter=30))
    b = optimize_rate(psi, [(2, 1)], restarts=3, seed=5, config=OptimizerConfig(max_iter=30, workers=3))
    assert a.value == b.value
    assert np.array_equal(a.best_parameters, b.best_parameters)


def test_optimize_validation():
    with pytest.raises(ValueError):
        optimize_rate(BELL, [], restarts=1)
    with pytest.raises(ValueError):
        optimize_rate(BELL, [(2, 1)], restarts=0)


def test_parse_dims():
    assert parse_dims("2x1, 2X2") == [(2, 1), (2, 2)]


def test_rate_result_json():
    res = optimize_rate(GHZ, [(2, 1)], restarts=1, config=OptimizerConfig(max_iter=5))
    data = res.to_json()
    assert data["best_dims"] == [2, 1, 2]
    assert len(data["best_parameters"]) == 16


# --- SW rate -------------------------------------------------------------------------------


def test_sw_rate_examples(rng):
    assert sw_rate(bell_state()) == pytest.approx(2.0, abs=1e-12)
    prod = tensor(random_density(RegisterLayout.of(A=2), rng), random_density(RegisterLayout.of(B=2), rng))
    assert sw_rate(prod) == pytest.approx(0.0, abs=1e-12)


def test_sw_rate_werner():
    # eigenvalues 0.8125 and 0.0625 (x3), marginals I/2
    s_ab = -0.8125 * math.log2(0.8125) - 3 * 0.0625 * math.log2(0.0625)
    assert sw_rate(werner_state(0.75)) == pytest.approx(2 - s_ab, abs=1e-12)
    assert sw_rate(werner_state(0.75)) == pytest.approx(1.0066072709896374, abs=1e-12)


def test_sw_rate_partition_error(rng):
    with pytest.raises(PartitionError):
        sw_rate(random_density(RegisterLayout.of(A=2, B=2, E=2), rng))


# --- cross-check -------------------------------------------------------------------------


def test_cross_check_bell():
    rep = theorem_cross_check(BELL, CrossCheckBudget(restarts=2, trials=2))
    assert rep["consistent"], rep["violations"]
    assert rep["bell_pairs"] == 1
    assert rep["optimizer_value"] >= 0.99
    assert rep["protocol_classical_bits"] == 2 * rep["protocol_qubits"] == 2
    assert rep["classical_equals_twice_quantum"]


def test_cross_check_two_bell_pairs():
    two = with_trivial(tensor(bell_state("A1", "B1"), bell_state("A2", "B2")), "E")
    psi = PureState(RegisterLayout.of(A=4, B=4, E=1),
                    two.reorder(("A1", "A2", "B1", "B2", "E")).amplitudes)
    rep = theorem_cross_check(psi, CrossCheckBudget(dims=((4, 1),), restarts=1, trials=1,
                                                     optimizer=OptimizerConfig(max_iter=5)))
    assert rep["bell_pairs"] == 2
    assert (rep["protocol_qubits"], rep["protocol_classical_bits"]) == (2, 4)
    assert rep["consistent"]


def test_cross_check_ghz():
    rep = theorem_cross_check(GHZ, CrossCheckBudget(restarts=2))
    assert rep["bell_pairs"] == 0
    assert rep["optimizer_value"] <= 1e-6
    assert rep["eve_decoupling_A_E"] == pytest.approx(1.0, abs=1e-12)
    assert rep["consistent"]


def test_cross_check_product():
    rep = theorem_cross_check(_product(1), CrossCheckBudget(restarts=2))
    assert rep["optimizer_value"] <= 1e-6
    assert rep["protocol_qubits"] == rep["protocol_classical_bits"] == 0
    assert rep["consistent"]
