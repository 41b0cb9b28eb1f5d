import numpy as np
import pytest

from waveprecond import dwt, fdm, precond, qmi, qsim, solver
from waveprecond.qmi import QmiConfig
from waveprecond.qsim import Circuit, StateVector


def l2_problem(n):
    sys = fdm.discretize("L2", n)
    W = dwt.build_transform_matrix(dwt.wavelet_from_name("db3"), n)
    return solver.pipeline_problem(sys, W, precond.build_preconditioner(n)).A_p


def phase_distribution(H, t, col=0):
    c = qmi.qpe_circuit(H, t)
    m = c.num_qubits - t
    evals, evecs = np.linalg.eigh(H)
    v = np.zeros(2**c.num_qubits, dtype=complex)
    v[: 2**m] = evecs[:, col]
    out = qsim.run(c, StateVector(v, c.num_qubits)).amplitudes.reshape(2**t, 2**m)
    return np.sum(np.abs(out) ** 2, axis=1)


def test_qpe_exact_phase():
    probs = phase_distribution(np.diag([0.25, 0.5]), 2)
    assert probs[0b01] == pytest.approx(1)


def test_qpe_third_modal_outcome():
    t = 4
    probs = phase_distribution(np.diag([1 / 3, 0.5]), t)
    assert int(np.argmax(probs)) == round(2**t / 3)
    # analytic distribution |sum_j exp(2 pi i j (phi - k/T))|^2 / T^2
    T = 2**t
    k = np.arange(T)
    delta = 1 / 3 - k / T
    j = np.arange(T)
    amp = np.exp(2j * np.pi * np.outer(delta, j)).sum(axis=1) / T
    np.testing.assert_allclose(probs, np.abs(amp) ** 2, atol=1e-12)


def test_qpe_identity_is_branchless():
    probs = phase_distribution(np.eye(4), 3)
    assert probs[0] == pytest.approx(1)


def test_qpe_rejects_non_hermitian():
    with pytest.raises(ValueError):
        qmi.qpe_circuit(np.array([[0, 1], [0, 0]]), 2)


def test_qft_matches_dft():
    t = 3
    F = qsim.circuit_to_matrix(qmi.qft_circuit(t))
    T = 2**t
    expected = np.exp(2j * np.pi * np.outer(np.arange(T), np.arange(T)) / T) / np.sqrt(T)
    np.testing.assert_allclose(F, expected, atol=1e-12)


def _crot_flag_amplitude(t, alpha, k):
    c = qmi.crot_circuit(t, alpha)
    out = qsim.run(c, StateVector.basis(t + 1, k))
    return out.amplitudes[k].real


def test_crot_unit_eigenvalue():
    # register value 0 stands for lambda = 1
    assert _crot_flag_amplitude(3, 1.0, 0) == pytest.approx(1)


def test_crot_half():
    t = 3
    assert _crot_flag_amplitude(t, 4.0, 2 ** (t - 1)) == pytest.approx(0.5)


def test_crot_table_matches_amplitudes():
    t, alpha = 4, 3.0
    f = qmi.crot_amplitudes(t, alpha)
    for k in range(2**t):
        assert _crot_flag_amplitude(t, alpha, k) == pytest.approx(f[k], abs=1e-12)


def test_uniformly_controlled_ry_gate_count():
    gates = qmi.uniformly_controlled_ry(np.linspace(0, 1, 8), [1, 2, 3], 0)
    assert sum(g.kind == "RotY" for g in gates) == 8
    assert sum(len(g.controls) == 1 for g in gates) == 8


def test_config_validation():
    with pytest.raises(ValueError):
        QmiConfig("hhl")
    with pytest.raises(ValueError):
        QmiConfig("qpe_crot")
    with pytest.raises(ValueError):
        QmiConfig("qpe_crot", t=0)


def test_spectrum_checks():
    with pytest.raises(ValueError):
        qmi.build_qmi(np.diag([2.0, 0.5]), QmiConfig())
    with pytest.raises(ValueError):
        qmi.build_qmi(np.diag([1.0, 0.0]), QmiConfig())


def test_t_below_invariant():
    A = np.diag([1.0, 0.5, 0.25, 1.0])
    with pytest.raises(ValueError):
        qmi.build_qmi(A, QmiConfig("qpe_crot", t=3, eps=1e-3))
    be = qmi.build_qmi(A, QmiConfig("qpe_crot", eps=0.5))
    assert be.meta["t"] == qmi.required_bits(4.0, 0.5)


def test_alpha_below_inverse_norm():
    with pytest.raises(ValueError):
        qmi.build_qmi(np.diag([1.0, 0.5]), QmiConfig(alpha=1.0))


@pytest.mark.parametrize("route,t", [("oracle_dilation", None), ("qpe_crot", 2)])
def test_identity(route, t):
    be = qmi.build_qmi(np.eye(4), QmiConfig(route, t=t))
    np.testing.assert_allclose(be.extract(), np.eye(4) / be.alpha, atol=1e-10)


def test_diagonal_exact_phases():
    A = np.diag([1.0, 0.5, 0.25, 1.0])
    be = qmi.build_qmi(A, QmiConfig("qpe_crot", t=2))
    assert be.a == 3
    np.testing.assert_allclose(be.extract(), np.linalg.inv(A) / be.alpha, atol=1e-9)


def test_small_hhl_on_diagonal():
    A = np.diag([1.0, 0.75, 0.5, 0.25])
    be = qmi.build_qmi(A, QmiConfig("qpe_crot", t=5))
    err = np.abs(be.extract() - np.linalg.inv(A) / be.alpha).max()
    assert err < 1e-9


def test_oracle_route_exact():
    A = l2_problem(4)
    be = qmi.build_qmi(A, QmiConfig())
    assert qmi.measured_error(be, A) <= 1e-10 * be.alpha
    assert be.eps <= 1e-10


def test_alpha_can_exceed_norm():
    A = np.diag([1.0, 0.5])
    be = qmi.build_qmi(A, QmiConfig(alpha=5.0))
    np.testing.assert_allclose(be.alpha * be.extract(), np.diag([1.0, 2.0]), atol=1e-10)


def test_qpe_l2_declared_bound_and_monotone():
    A = l2_problem(4)
    errs = []
    for t in (4, 6, 8):
        be = qmi.build_qmi(A, QmiConfig("qpe_crot", t=t))
        e = qmi.measured_error(be, A)
        assert e <= be.eps
        errs.append(e)
    assert errs == sorted(errs, reverse=True)


def test_qpe_l2_t8_within_one_percent():
    # normalized extraction error at t = 8 on the 16 x 16 L2 system
    A = l2_problem(4)
    be = qmi.build_qmi(A, QmiConfig("qpe_crot", t=8))
    err = np.linalg.norm(be.extract(cap=20) - np.linalg.inv(A) / be.alpha, 2)
    assert err <= 1e-2


def test_qpe_spd_l3_converges():
    n = 3
    sys = fdm.discretize("L3", n)
    W = dwt.build_transform_matrix(dwt.wavelet_from_name("db3"), n)
    A = solver.pipeline_problem(sys, W, precond.build_preconditioner(n)).A_p
    be = qmi.build_qmi(A, QmiConfig("qpe_crot", t=10))
    assert be.meta["symmetric"]
    assert qmi.measured_error(be, A) / be.alpha < 1e-3


def test_report_row_fields():
    A = np.diag([1.0, 0.5, 0.25, 1.0])
    row = qmi.report_row(qmi.build_qmi(A, QmiConfig("qpe_crot", t=2)), A)
    assert set(row) == {"route", "t", "alpha", "declared_eps", "measured_err"}
    assert row["measured_err"] <= row["declared_eps"]


def test_qmi_ancillas_return_clean_on_exact_phases():
    A = np.diag([1.0, 0.5, 0.25, 1.0])
    be = qmi.build_qmi(A, QmiConfig("qpe_crot", t=2))
    c = be.circuit
    phase = list(c.roles["phase"])
    assert qsim.ancillas_clean(Circuit(c.num_qubits).compose(c), list(be.data), phase)
