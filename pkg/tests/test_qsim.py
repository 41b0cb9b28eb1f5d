import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveprecond import qsim
from waveprecond.qsim import Circuit, Gate, StateVector


def random_state(q, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2**q) + 1j * rng.standard_normal(2**q)
    return StateVector(v / np.linalg.norm(v), q)


def test_hadamard_on_zero():
    out = qsim.apply(StateVector.zero(1), qsim.h(0))
    np.testing.assert_allclose(out.amplitudes, [2**-0.5, 2**-0.5])


def test_rot_z_convention():
    th = 0.37
    out0 = qsim.apply(StateVector.basis(1, 0), qsim.rot_z(0, th))
    out1 = qsim.apply(StateVector.basis(1, 1), qsim.rot_z(0, th))
    assert np.isclose(out0.amplitudes[0], np.exp(1j * th))
    assert np.isclose(out1.amplitudes[1], np.exp(-1j * th))


def test_phase_gate():
    np.testing.assert_allclose(qsim.phase(0, 0.5).unitary(), np.diag([1, np.exp(0.5j)]))


def test_toffoli_is_and():
    c = Circuit(3).append(qsim.toffoli(0, 1, 2))
    for a in (0, 1):
        for b in (0, 1):
            out = qsim.run(c, StateVector.basis(3, 4 * a + 2 * b))
            assert out.probability({2: a & b}) == pytest.approx(1)


def test_toffoli_polarity():
    c = Circuit(3).append(qsim.toffoli(0, 1, 2, 0, 1))
    out = qsim.run(c, StateVector.basis(3, 0b010))
    assert out.probability({2: 1}) == pytest.approx(1)
    out = qsim.run(c, StateVector.basis(3, 0b110))
    assert out.probability({2: 0}) == pytest.approx(1)


def test_qubit_zero_is_msb():
    out = qsim.apply(StateVector.zero(3), qsim.x(0))
    assert abs(out.amplitudes[4]) == pytest.approx(1)


def test_empty_circuit_is_identity():
    s = random_state(3)
    np.testing.assert_allclose(qsim.run(Circuit(3), s).amplitudes, s.amplitudes)


def _random_circuit(q, seed):
    rng = np.random.default_rng(seed)
    c = Circuit(q)
    for _ in range(25):
        kind = rng.integers(6)
        a, b, t = rng.choice(q, 3, replace=False)
        if kind == 0:
            c.append(qsim.h(a))
        elif kind == 1:
            c.append(qsim.toffoli(a, b, t, int(rng.integers(2)), 1))
        elif kind == 2:
            c.append(qsim.phase(a, rng.uniform(0, 6), [(b, int(rng.integers(2)))]))
        elif kind == 3:
            c.append(qsim.rot_y(a, rng.uniform(0, 6), [(t, 1)]))
        elif kind == 4:
            c.append(qsim.swap(a, b))
        else:
            m = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
            c.append(qsim.unitary_block([a, b], m, [(t, 0)]))
    return c


@pytest.mark.parametrize("seed", range(4))
def test_circuit_then_inverse(seed):
    c = _random_circuit(5, seed)
    s = random_state(5, seed)
    back = qsim.run(c.inverse(), qsim.run(c, s))
    np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_matrix_unitary_and_columns(seed):
    c = _random_circuit(4, seed)
    U = qsim.circuit_to_matrix(c)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(16), atol=1e-10)
    np.testing.assert_allclose(U[:, 5], qsim.run(c, StateVector.basis(4, 5)).amplitudes, atol=1e-12)


def test_matrix_of_single_gates():
    np.testing.assert_allclose(qsim.circuit_to_matrix(Circuit(1).append(qsim.h(0))),
                               np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    swap = qsim.circuit_to_matrix(Circuit(2).append(qsim.swap(0, 1)))
    np.testing.assert_array_equal(swap.real, np.eye(4)[[0, 2, 1, 3]])


def test_matrix_cap():
    with pytest.raises(ValueError):
        qsim.circuit_to_matrix(Circuit(15), cap=14)


def test_index_validation():
    with pytest.raises(IndexError):
        Circuit(2).append(qsim.h(2))
    with pytest.raises(ValueError):
        Gate("X", (0,), ((0, 1),))
    with pytest.raises(ValueError):
        qsim.unitary_block([0], np.array([[1, 1], [0, 1]]))


def test_success_probability():
    s = StateVector.zero(3)
    assert qsim.success_probability(s, {0: 0}) == 1
    plus = qsim.apply(StateVector.zero(1), qsim.h(0))
    assert qsim.success_probability(plus, {0: 0}) == pytest.approx(0.5)


def test_census_keys():
    c = Circuit(4).extend([qsim.x(0), qsim.cnot(0, 1), qsim.toffoli(0, 1, 2),
                           qsim.Gate("X", (3,), ((0, 1), (1, 1), (2, 1))), qsim.z(0, [(1, 1), (2, 0)]),
                           qsim.unitary_block([0, 1], np.eye(4), label="W")])
    cen = c.census()
    assert cen["X"] == cen["CNOT"] == cen["Toffoli"] == cen["MCX3"] == 1
    assert cen["UnitaryBlock[W]"] == 1


def test_extract_block_and_ancillas_clean():
    # CNOT onto a fresh ancilla does not return it clean
    c = Circuit(2).append(qsim.cnot(0, 1))
    assert not qsim.ancillas_clean(c, [0], [1])
    c.append(qsim.cnot(0, 1))
    assert qsim.ancillas_clean(c, [0], [1])
    block = qsim.extract_block(Circuit(2).append(qsim.h(0)), data=[1], ancillas=[0])
    np.testing.assert_allclose(block, np.eye(2) / np.sqrt(2))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), q=st.integers(3, 6))
def test_norm_preserved(seed, q):
    c = _random_circuit(q, seed)
    s = random_state(q, seed)
    assert abs(qsim.run(c, s).norm - 1) < 1e-12


def test_controlled_circuit_matches_block():
    c = _random_circuit(3, 9)
    U = qsim.circuit_to_matrix(c)
    big = Circuit(4).compose(c, [1, 2, 3]).controlled(0, 0)
    M = qsim.circuit_to_matrix(big)
    np.testing.assert_allclose(M[:8, :8], U, atol=1e-12)
    np.testing.assert_allclose(M[8:, 8:], np.eye(8), atol=1e-12)
