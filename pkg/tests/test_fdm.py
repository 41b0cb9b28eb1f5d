import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveprecond import fdm
from waveprecond.fdm import OperatorKind, OperatorSpec


def shift_matrix(N):
    return np.roll(np.eye(N), 1, axis=0)


def test_l1_small_circulant():
    sys = fdm.discretize_1d(OperatorSpec(OperatorKind.L1), 2)
    h = 0.25
    expected = np.array([[-2, 1, 0, 1], [1, -2, 1, 0], [0, 1, -2, 1], [1, 0, 1, -2]]) / h**2
    np.testing.assert_allclose(sys.A, expected)
    assert sys.kernel_dim == 1


@pytest.mark.parametrize("n", [2, 3, 5])
def test_l1_eigenvalues(n):
    A = fdm.discretize("L1", n).A
    N = 2**n
    k = np.arange(N)
    closed = np.sort(-(4 * N**2) * np.sin(np.pi * k / N) ** 2)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(A)), closed, atol=1e-9 * N**2)


def test_l2_nonsymmetric_part_is_central_difference():
    sys = fdm.discretize("L2", 3)
    N, h = 8, 1 / 8
    skew = (sys.A - sys.A.T) / 2
    # first-derivative term enters with a minus sign
    row = np.zeros(N)
    row[1], row[-1] = 1 / (2 * h), -1 / (2 * h)
    np.testing.assert_allclose(np.abs(skew[0]), np.abs(row), atol=1e-12)
    np.testing.assert_allclose(skew, -fdm.central_difference(3), atol=1e-12)


def test_l2_diagonal_carries_identity():
    A = fdm.discretize("L2", 4).A
    np.testing.assert_allclose(np.diag(A), -2 * 16**2 + 1)


def test_l3_symmetric_and_positive():
    A = fdm.discretize("L3", 5).A
    assert np.abs(A - A.T).max() < 1e-12
    assert np.linalg.eigvalsh(A).min() > 0


def test_sturm_liouville_coefficients_checked():
    bad = OperatorSpec(OperatorKind.STURM_LIOUVILLE_1D, p=lambda x: np.sin(2 * np.pi * x))
    with pytest.raises(ValueError):
        fdm.discretize_1d(bad, 4)
    neg_q = OperatorSpec(OperatorKind.STURM_LIOUVILLE_1D, p=lambda x: 1 + 0 * x, q=lambda x: -1 + 0 * x)
    with pytest.raises(ValueError):
        fdm.discretize_1d(neg_q, 4)


def test_sturm_liouville_constant_p_matches_l1():
    spec = OperatorSpec(OperatorKind.STURM_LIOUVILLE_1D, p=lambda x: np.ones_like(x))
    A = fdm.discretize_1d(spec, 4).A
    np.testing.assert_allclose(A, -fdm.discretize("L1", 4).A, atol=1e-9)


def test_invalid_n():
    with pytest.raises(ValueError):
        fdm.discretize("L1", 1)
    with pytest.raises(ValueError):
        fdm.discretize_2d_laplacian(1)


def test_laplace2d_kronecker_sum():
    sys = fdm.discretize_2d_laplacian(2)
    T = fdm.discretize("L1", 2).A
    np.testing.assert_allclose(sys.A, np.kron(T, np.eye(4)) + np.kron(np.eye(4), T))
    np.testing.assert_allclose(sys.A.sum(axis=1), 0, atol=1e-12)
    assert sys.N == 16 and sys.kernel_dim == 1


def test_laplace2d_spectrum_pairwise_sums():
    ev1 = np.linalg.eigvalsh(fdm.discretize("L1", 3).A)
    ev2 = np.linalg.eigvalsh(fdm.discretize_2d_laplacian(3).A)
    pairs = np.sort((ev1[:, None] + ev1[None, :]).ravel())
    np.testing.assert_allclose(np.sort(ev2), pairs, atol=1e-8)


def test_rescale_scalar():
    sys = fdm.DiscretizedSystem(A=2 * np.eye(4), b=np.ones(4), n=2, d=1, kind=OperatorKind.L3)
    out = fdm.rescale_to_unit_norm(sys)
    np.testing.assert_allclose(out.A, np.eye(4))
    assert out.norm_scale == 2


def test_rescale_l1():
    out = fdm.rescale_to_unit_norm(fdm.discretize("L1", 4))
    assert abs(np.linalg.norm(out.A, 2) - 1) < 1e-12
    N = 16
    assert np.isclose(out.norm_scale, (4 * N**2 * np.sin(np.pi * np.arange(N) / N) ** 2).max())


def test_rescale_rejects_zero():
    sys = fdm.DiscretizedSystem(A=np.zeros((4, 4)), b=np.ones(4), n=2, d=1, kind=OperatorKind.L3)
    with pytest.raises(ValueError):
        fdm.rescale_to_unit_norm(sys)


def test_build_rhs_profiles():
    np.testing.assert_array_equal(fdm.build_rhs("delta", 4), [1, 0, 0, 0])
    x = np.arange(8) / 8
    np.testing.assert_allclose(fdm.build_rhs("gaussian_samples", 8), np.exp(-((x - 0.5) ** 2) / 0.02))
    b = fdm.build_rhs("constant_free", 32)
    assert abs(b.sum()) < 1e-12 and np.linalg.norm(b) > 0
    with pytest.raises(ValueError):
        fdm.build_rhs("nope", 4)


def test_constant_free_needs_another_base():
    with pytest.raises(ValueError):
        fdm.build_rhs("constant_free", 4, base="constant_free")


@pytest.mark.parametrize("kind", ["L1", "L2"])
def test_constant_coefficient_kinds_are_circulant(kind):
    A = fdm.discretize(kind, 4).A
    S = shift_matrix(16)
    assert np.abs(A @ S - S @ A).max() < 1e-12 * np.abs(A).max()


def test_coercivity_on_kernel_complement():
    for kind in ("L1", "L3"):
        sys = fdm.discretize(kind, 5)
        A = -sys.A if kind == "L1" else sys.A
        H = (A + A.T) / 2
        ev = np.linalg.eigvalsh(H)
        assert ev[sys.kernel_dim] > 0


def test_l2_symmetric_part_is_indefinite():
    # -d2/dx2 with the -d/dx term and +1 does not give a coercive form on this grid
    H = fdm.discretize("L2", 4).A
    ev = np.linalg.eigvalsh((H + H.T) / 2)
    assert ev.min() < 0 < ev.max()


def test_poisson_convergence_second_order():
    errs = []
    for n in (4, 5, 6, 7):
        sys = fdm.discretize("L1", n)
        x = fdm.grid(n)
        b = -np.sin(2 * np.pi * x)
        u = np.linalg.lstsq(sys.A, b, rcond=None)[0]
        u -= u.mean()
        errs.append(np.abs(u - np.sin(2 * np.pi * x) / (4 * np.pi**2)).max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2) < 0.1)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 6), kind=st.sampled_from(["L1", "L3"]))
def test_symmetric_kinds(n, kind):
    A = fdm.discretize(kind, n).A
    assert np.abs(A - A.T).max() <= 1e-12 * max(1, np.abs(A).max())


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 7))
def test_rescale_bound(n):
    out = fdm.rescale_to_unit_norm(fdm.discretize("L2", n))
    assert np.linalg.norm(out.A, 2) <= 1 + 1e-12
