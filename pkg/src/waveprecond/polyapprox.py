"""Chebyshev approximations of ``1/x`` and of the unit step, and their matrix evaluation.

Inverse series: on ``[1/c, 1]`` write ``1/(2x) = 1/(x' + z0)`` with
``x' = 2x - z0`` in ``[-1, 1]`` and ``z0 = 1 + 2/c``.  The closed-form
expansion

    1/(x'+z) = 1/sqrt(z^2-1) + 2/sqrt(z^2-1) sum_l (-1)^l rho^-l T_l(x'),
    rho = z + sqrt(z^2 - 1)

has geometrically decaying coefficients, so the truncation error is the
tail of a geometric series.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.special import erf, erfcinv

GRID_POINTS = 10_000
DEGREE_CAP = 4001


@dataclass(frozen=True)
class ChebySeries:
    """``sum_l coeffs[l] T_l(2x - z0)`` approximating ``1/(2x)`` on ``[1/c, 1]``."""

    coeffs: np.ndarray
    z0: float
    c: float
    ell_max: int
    target: float
    ell_log: int

    def __call__(self, x):
        return C.chebval(2.0 * np.asarray(x, dtype=float) - self.z0, self.coeffs)

    @property
    def ratio(self) -> float:
        return 1.0 / (self.z0 + np.sqrt(self.z0**2 - 1.0))

    def grid_error(self, points: int = GRID_POINTS) -> float:
        x = np.linspace(1.0 / self.c, 1.0, points)
        return float(np.max(np.abs(self(x) - 0.5 / x)))


def inverse_coefficients(z: float, ell_max: int) -> np.ndarray:
    root = np.sqrt(z * z - 1.0)
    rho = z + root
    ell = np.arange(1, ell_max + 1)
    return np.concatenate([[1.0 / root], 2.0 * (-1.0) ** ell / (root * rho**ell)])


def tail_bound(z: float, ell_max: int) -> float:
    """Sum of the dropped coefficient magnitudes (bounds the sup-norm error)."""
    root = np.sqrt(z * z - 1.0)
    q = 1.0 / (z + root)
    return float(2.0 / root * q ** (ell_max + 1) / (1.0 - q))


def log_truncation(eps: float) -> int:
    """``ceil(2 + 2 log2(1/eps))``, the count that assumes a coefficient ratio of ``1/sqrt(2)``."""
    return int(np.ceil(2.0 + 2.0 * np.log2(1.0 / eps)))


def inverse_series(c: float, eps: float) -> ChebySeries:
    """Series for ``1/(2x)`` on ``[1/c, 1]`` with sup-norm error at most ``eps/2``.

    The truncation is the larger of the ``1/sqrt(2)``-ratio count and the
    count from the actual geometric tail; the former ignores the
    ``2/sqrt(z0^2 - 1)`` prefactor and is too short for large ``c``.
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    z0 = 1.0 + 2.0 / c
    ell_log = log_truncation(eps)
    ell = 0
    while tail_bound(z0, ell) > eps / 2:
        ell += 1
    ell_max = max(ell_log, ell)
    return ChebySeries(inverse_coefficients(z0, ell_max), z0, float(c), ell_max, eps / 2, ell_log)


def minimal_truncation(c: float, eps: float, points: int = GRID_POINTS) -> int:
    """Smallest ``ell`` whose truncated series meets ``eps/2`` on the grid."""
    z0 = 1.0 + 2.0 / c
    x = np.linspace(1.0 / c, 1.0, points)
    full = inverse_coefficients(z0, inverse_series(c, eps).ell_max)
    for ell in range(len(full)):
        if np.max(np.abs(C.chebval(2 * x - z0, full[: ell + 1]) - 0.5 / x)) <= eps / 2:
            return ell
    return len(full) - 1


@dataclass(frozen=True)
class StepPolynomial:
    """``1/2 + 1/2 P_sign`` with ``P_sign`` an odd Chebyshev fit of ``erf(k x)``."""

    sign_coeffs: np.ndarray
    c: float
    eps: float
    k: float

    def sign(self, x):
        return C.chebval(np.asarray(x, dtype=float), self.sign_coeffs)

    def __call__(self, x):
        return 0.5 + 0.5 * self.sign(x)

    @property
    def degree(self) -> int:
        return len(self.sign_coeffs) - 1


def _odd_cheb_fit(f, degree: int) -> np.ndarray:
    coeffs = C.chebinterpolate(f, degree)
    coeffs[0::2] = 0.0  # exact oddness
    return coeffs


def step_polynomial(c: float, eps: float, points: int = GRID_POINTS, degree_cap: int = DEGREE_CAP) -> StepPolynomial:
    """Step polynomial within ``eps`` of the unit step away from ``(-1/c, 1/c)``, bounded by 1.

    The smoothing width of ``erf(k x)`` is chosen so that ``erf(k/c)`` is
    within ``eps/2`` of 1; the degree is the smallest odd degree that passes
    the grid check.
    """
    if c < 1 or not 0 < eps < 1:
        raise ValueError("need c >= 1 and 0 < eps < 1")
    # erfc(k/c) <= eps/2 with a little room for the polynomial error
    k = c * float(erfcinv(eps / 4.0))
    x = np.linspace(-1.0, 1.0, 2 * points + 1)
    outside = np.abs(x) >= 1.0 / c
    target = np.where(x > 0, 1.0, 0.0)
    degree = 1
    while degree <= degree_cap:
        co = _odd_cheb_fit(lambda t: erf(k * t), degree)
        # shrink slightly so |P_sign| <= 1 survives rounding
        vals = C.chebval(x, co)
        peak = np.max(np.abs(vals))
        if peak > 1.0:
            co = co / peak
            vals = vals / peak
        step = 0.5 + 0.5 * vals
        if np.max(np.abs(step[outside] - target[outside])) <= eps:
            return StepPolynomial(co, float(c), float(eps), float(k))
        degree += 2
    raise RuntimeError(f"no step polynomial below degree {degree_cap}")


@dataclass(frozen=True)
class MatrixInversePolynomial:
    """Odd polynomial ``P_mi(x) ~ 1/(2 c x)`` on ``[1/c, 1]``, bounded by 1 on ``[-1, 1]``.

    ``P_inv(x) = 2x S(x^2)`` with ``S`` the inverse series for ``1/(2y)`` on
    ``[1/c^2, 1]``; it is odd and bounded, and then
    ``P_mi = (1/2c)[P_inv(x) P_step(x) - P_inv(-x) P_step(-x)]``.
    """

    inner: ChebySeries
    step: StepPolynomial
    c: float
    eps: float

    def inv(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x * self.inner(x * x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.inv(x) * self.step(x) - self.inv(-x) * self.step(-x)) / (2.0 * self.c)

    @property
    def degree(self) -> int:
        return 2 * self.inner.ell_max + 1 + self.step.degree

    def grid_error(self, points: int = GRID_POINTS) -> float:
        x = np.linspace(1.0 / self.c, 1.0, points)
        return float(np.max(np.abs(self(x) - 1.0 / (2.0 * self.c * x))))

    def max_magnitude(self, points: int = GRID_POINTS) -> float:
        x = np.linspace(-1.0, 1.0, 2 * points + 1)
        return float(np.max(np.abs(self(x))))

    def oddness_error(self, points: int = GRID_POINTS) -> float:
        x = np.linspace(0.0, 1.0, points)
        return float(np.max(np.abs(self(x) + self(-x))))


def matrix_inverse_polynomial_fn(c: float, eps: float) -> MatrixInversePolynomial:
    # S error eps/2 gives |P_inv - 1/x| <= eps x <= 2 eps, i.e. eps/c after the 1/(2c) factor
    return MatrixInversePolynomial(inverse_series(c * c, eps), step_polynomial(c, eps), float(c), float(eps))


def _clenshaw_matrix(coeffs: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``sum_l coeffs[l] T_l(Y)`` by the three-term recurrence on matrices."""
    n = Y.shape[0]
    eye = np.eye(n)
    b1 = np.zeros_like(Y)
    b2 = np.zeros_like(Y)
    for a in coeffs[:0:-1]:
        b1, b2 = a * eye + 2.0 * Y @ b1 - b2, b1
    return coeffs[0] * eye + Y @ b1 - b2


def _poly_of_matrix(poly: MatrixInversePolynomial, A: np.ndarray) -> np.ndarray:
    """``P_mi(A)`` for symmetric ``A`` (all powers commute)."""
    eye = np.eye(A.shape[0])
    A2 = A @ A
    S = _clenshaw_matrix(poly.inner.coeffs, 2.0 * A2 - poly.inner.z0 * eye)
    inv_pos = 2.0 * A @ S  # P_inv(A); P_inv(-A) = -P_inv(A)
    sgn = _clenshaw_matrix(poly.step.sign_coeffs, A)
    step_pos = 0.5 * eye + 0.5 * sgn
    step_neg = 0.5 * eye - 0.5 * sgn
    return (inv_pos @ step_pos + inv_pos @ step_neg) / (2.0 * poly.c)


def verify_spectrum(A_p: np.ndarray, c: float) -> tuple[bool, np.ndarray]:
    """(symmetric, spectrum) where the spectrum (eigenvalues, or singular values
    for a nonsymmetric matrix) must lie in ``[1/c, 1]``."""
    A_p = np.asarray(A_p, dtype=float)
    sym = bool(np.allclose(A_p, A_p.T, atol=1e-12))
    spec = np.linalg.eigvalsh(A_p) if sym else np.linalg.svd(A_p, compute_uv=False)
    tol = 1e-12
    if spec.min() < 1.0 / c - tol or spec.max() > 1.0 + tol:
        raise ValueError(f"spectrum [{spec.min():.4g}, {spec.max():.4g}] not inside [1/c, 1] = [{1/c:.4g}, 1]")
    return sym, spec


@dataclass
class MatrixInverseResult:
    value: np.ndarray
    error: float
    bound: float
    max_magnitude: float
    degree: int


def matrix_inverse_polynomial(A_p: np.ndarray, c: float, eps: float,
                              poly: Optional[MatrixInversePolynomial] = None) -> MatrixInverseResult:
    """Evaluate ``P_mi(A_p) ~ (1/2c) A_p^{-1}``.

    A nonsymmetric ``A_p`` goes through its Hermitian dilation
    ``[[0, A_p], [A_p^T, 0]]``; an odd polynomial of it carries
    ``P_mi``'s singular-value transform of ``A_p^{-1}`` in the lower-left block.
    """
    A_p = np.asarray(A_p, dtype=float)
    sym, _ = verify_spectrum(A_p, c)
    poly = poly or matrix_inverse_polynomial_fn(c, eps)
    N = A_p.shape[0]
    if sym:
        value = _poly_of_matrix(poly, A_p)
    else:
        H = np.block([[np.zeros((N, N)), A_p], [A_p.T, np.zeros((N, N))]])
        value = _poly_of_matrix(poly, H)[N:, :N]
    err = float(np.linalg.norm(value - np.linalg.inv(A_p) / (2.0 * c), 2))
    return MatrixInverseResult(value, err, eps / c, poly.max_magnitude(), poly.degree)


def coefficient_rows(series: ChebySeries) -> list[tuple[int, float]]:
    return [(ell, float(a)) for ell, a in enumerate(series.coeffs)]
