import numpy as np
import pytest

from waveprecond import dwt, fdm, polyapprox as pa, precond


def test_single_point_interval():
    s = pa.inverse_series(1.0, 1e-3)
    assert s(1.0) == pytest.approx(0.5, abs=1e-3)


def test_c32_truncation_count():
    s = pa.inverse_series(32, 1e-3)
    assert s.ell_log == 22
    assert s.ell_max == 22


def test_c32_grid_error():
    s = pa.inverse_series(32, 1e-3)
    assert s.grid_error() <= 5e-4


def test_log_count_short_at_c32():
    # with only 22 terms the tail is too heavy for the eps/2 target
    z0 = 1 + 2 / 32
    coeffs = pa.inverse_coefficients(z0, 22)
    x = np.linspace(1 / 32, 1, 10_000)
    err = np.max(np.abs(np.polynomial.chebyshev.chebval(2 * x - z0, coeffs) - 0.5 / x))
    assert err > 5e-4


def test_coefficients_geometric():
    s = pa.inverse_series(8, 1e-6)
    a = np.abs(s.coeffs[1:])
    np.testing.assert_allclose(a[1:] / a[:-1], s.ratio, rtol=1e-12)
    assert s.coeffs[1] < 0 < s.coeffs[2]


@pytest.mark.parametrize("c,eps", [(2, 1e-2), (4, 1e-4), (16, 1e-6), (64, 1e-3)])
def test_series_meets_target(c, eps):
    s = pa.inverse_series(c, eps)
    assert s.grid_error() <= eps / 2
    assert pa.tail_bound(s.z0, s.ell_max) <= eps / 2


def test_invalid_arguments():
    with pytest.raises(ValueError):
        pa.inverse_series(0.5, 1e-3)
    with pytest.raises(ValueError):
        pa.inverse_series(4, 1.5)
    with pytest.raises(ValueError):
        pa.step_polynomial(4, 0)


def test_step_values():
    c, eps = 8, 1e-3
    st = pa.step_polynomial(c, eps)
    assert st(1.0) == pytest.approx(1, abs=eps)
    assert st(-1 / c) == pytest.approx(0, abs=eps)
    x = np.linspace(-1, 1, 20_001)
    assert np.max(np.abs(st.sign(x))) <= 1 + 1e-12
    assert st.degree % 2 == 1


def test_step_degree_cap():
    with pytest.raises(RuntimeError):
        pa.step_polynomial(64, 1e-6, degree_cap=11)


def test_identity_c2():
    res = pa.matrix_inverse_polynomial(np.eye(4), 2, 1e-3)
    np.testing.assert_allclose(res.value, np.eye(4) / 4, atol=1e-3 / 2)


def test_diagonal_c4():
    A = np.diag([1, 0.5, 0.25])
    res = pa.matrix_inverse_polynomial(A, 4, 1e-3)
    assert np.linalg.norm(res.value - np.linalg.inv(A) / 8, 2) <= 2.5e-4
    assert res.error <= res.bound


def test_l2_preconditioned():
    n = 5
    sys = fdm.discretize("L2", n)
    W = dwt.build_transform_matrix(dwt.wavelet_from_name("db3"), n)
    pre = precond.precondition(sys, W, precond.build_preconditioner(n))
    A = pre.A_p / pre.sigma_max
    c = float(np.ceil(pre.kappa_p))
    res = pa.matrix_inverse_polynomial(A, c, 1e-2)
    assert res.error <= 1e-2 / c


def test_spectrum_violation():
    with pytest.raises(ValueError):
        pa.matrix_inverse_polynomial(np.diag([1, 0.1]), 4, 1e-3)
    with pytest.raises(ValueError):
        pa.matrix_inverse_polynomial(np.diag([2, 0.5]), 4, 1e-3)


@pytest.fixture(scope="module")
def poly8():
    return pa.matrix_inverse_polynomial_fn(8, 1e-3)


def test_combined_odd(poly8):
    assert poly8.oddness_error() <= 1e-12


def test_combined_bounded(poly8):
    assert poly8.max_magnitude() <= 1


def test_combined_accuracy(poly8):
    assert poly8.grid_error() <= 1e-3 / 8


def test_minimal_degree_logarithmic():
    c = 8
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    deg = np.array([pa.minimal_truncation(c, e) for e in eps])
    assert np.all(np.diff(deg) > 0)
    X = np.log(1 / eps)
    slope, intercept = np.polyfit(X, deg, 1)
    resid = deg - (slope * X + intercept)
    assert np.max(np.abs(resid)) <= 1.5
    # increments per decade stay roughly constant (linear in log(1/eps), not a power law)
    inc = np.diff(deg)
    assert inc.max() - inc.min() <= 2


def test_coefficient_rows():
    s = pa.inverse_series(4, 1e-2)
    rows = pa.coefficient_rows(s)
    assert [r[0] for r in rows] == list(range(s.ell_max + 1))
