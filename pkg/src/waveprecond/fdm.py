"""Finite-difference discretizations of periodic differential operators.

All grids live on ``[0, 1)^d`` with ``N = 2**n`` points per dimension and
spacing ``h = 1/N``.  Matrices store the discretized operator itself, so the
second derivative ``L1`` comes out negative semidefinite.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

Coefficient = Callable[[np.ndarray], np.ndarray]


class OperatorKind(str, Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    LAPLACE2D = "Laplace2D"
    STURM_LIOUVILLE_1D = "SturmLiouville1D"


ONE_D_KINDS = (OperatorKind.L1, OperatorKind.L2, OperatorKind.L3, OperatorKind.STURM_LIOUVILLE_1D)
SYMMETRIC_KINDS = (
    OperatorKind.L1,
    OperatorKind.L3,
    OperatorKind.LAPLACE2D,
    OperatorKind.STURM_LIOUVILLE_1D,
)


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator to discretize.

    ``p`` and ``q`` are only read for Sturm-Liouville kinds; the operator is
    ``-(p u')' + q u``.  ``L3`` is the Sturm-Liouville operator with
    ``p = cosh(x/4)`` and ``q = exp(x)``.
    """

    kind: OperatorKind
    p: Optional[Coefficient] = None
    q: Optional[Coefficient] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorKind(self.kind))

    def coefficients(self) -> tuple[Coefficient, Coefficient]:
        if self.kind is OperatorKind.L3:
            return (lambda x: np.cosh(x / 4.0)), np.exp
        if self.kind is OperatorKind.STURM_LIOUVILLE_1D:
            if self.p is None:
                raise ValueError("SturmLiouville1D needs a coefficient p(x)")
            q = self.q if self.q is not None else (lambda x: np.zeros_like(x))
            return self.p, q
        raise ValueError(f"{self.kind.value} has no Sturm-Liouville coefficients")


@dataclass(frozen=True)
class DiscretizedSystem:
    A: np.ndarray
    b: np.ndarray
    n: int
    d: int
    kind: OperatorKind
    norm_scale: float = 1.0
    kernel_dim: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def N(self) -> int:
        return 2 ** (self.n * self.d)

    @property
    def h(self) -> float:
        return 1.0 / 2**self.n

    def kernel_vector(self) -> Optional[np.ndarray]:
        """Normalized known null vector (the constant), or None."""
        if self.kernel_dim == 0:
            return None
        return np.full(self.N, 1.0 / np.sqrt(self.N))


def grid(n: int) -> np.ndarray:
    N = 2**n
    return np.arange(N) / N


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"need an integer n >= 2, got {n!r}")


def second_difference(n: int) -> np.ndarray:
    """Periodic 3-point second difference, rows ``(1, -2, 1) / h**2``."""
    N = 2**n
    shift = np.roll(np.eye(N), 1, axis=1)
    return (shift + shift.T - 2.0 * np.eye(N)) * N**2


def central_difference(n: int) -> np.ndarray:
    """Periodic central first difference, row 0 is ``(0, 1/2h, 0, ..., -1/2h)``."""
    N = 2**n
    shift = np.roll(np.eye(N), 1, axis=1)
    return (shift - shift.T) * (N / 2.0)


def sturm_liouville_matrix(p: Coefficient, q: Coefficient, n: int) -> np.ndarray:
    """Conservative flux form ``-D^-(p_{i+1/2} D^+ u) + q_i u`` on a periodic grid."""
    N = 2**n
    h = 1.0 / N
    x = grid(n)
    p_half = np.asarray(p(x + h / 2), dtype=float)
    q_node = np.asarray(q(x), dtype=float)
    if np.any(p_half <= 0) or not np.all(np.isfinite(p_half)):
        raise ValueError("Sturm-Liouville coefficient p must be positive and bounded on the grid")
    if np.any(q_node < 0) or not np.all(np.isfinite(q_node)):
        raise ValueError("Sturm-Liouville coefficient q must be nonnegative on the grid")
    p_left = np.roll(p_half, 1)  # p_{i-1/2}
    A = np.diag((p_half + p_left) / h**2 + q_node)
    idx = np.arange(N)
    A[idx, (idx + 1) % N] -= p_half / h**2
    A[idx, (idx - 1) % N] -= p_left / h**2
    return A


def build_rhs(profile: str, N: int, base: str = "gaussian_samples", d: int = 1) -> np.ndarray:
    """Right-hand side vectors on the grid.

    ``constant_free`` takes the ``base`` profile and subtracts its mean, which
    is what operators with the constant vector in their kernel need.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if profile == "delta":
        b = np.zeros(N)
        b[0] = 1.0
        return b
    if profile == "gaussian_samples":
        per_dim = round(N ** (1.0 / d))
        if per_dim**d != N:
            raise ValueError(f"N={N} is not a {d}-dimensional square grid")
        x = np.arange(per_dim) / per_dim
        g = np.exp(-((x - 0.5) ** 2) / 0.02)
        out = g
        for _ in range(d - 1):
            out = np.kron(out, g)
        return out
    if profile == "constant_free":
        if base == "constant_free":
            raise ValueError("constant_free needs a different base profile")
        b = build_rhs(base, N, d=d)
        b = b - b.mean()
        if np.linalg.norm(b) < 1e-14:
            raise ValueError("right-hand side vanishes after mean subtraction")
        return b
    raise ValueError(f"unknown rhs profile {profile!r}")


def discretize_1d(spec: OperatorSpec, n: int, rhs: Optional[np.ndarray] = None) -> DiscretizedSystem:
    _check_n(n)
    spec = spec if isinstance(spec, OperatorSpec) else OperatorSpec(spec)
    if spec.kind not in ONE_D_KINDS:
        raise ValueError(f"{spec.kind.value} is not a 1D operator")
    N = 2**n
    kernel_dim = 0
    if spec.kind is OperatorKind.L1:
        A = second_difference(n)
        kernel_dim = 1
    elif spec.kind is OperatorKind.L2:
        # d^2/dx^2 - d/dx + 1
        A = second_difference(n) - central_difference(n) + np.eye(N)
    else:
        p, q = spec.coefficients()
        A = sturm_liouville_matrix(p, q, n)
        # q == 0 leaves the constant in the kernel
        if np.allclose(A.sum(axis=1), 0.0, atol=1e-9 * np.abs(A).max()):
            kernel_dim = 1
    if rhs is None:
        rhs = build_rhs("constant_free" if kernel_dim else "gaussian_samples", N)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (N,):
        raise ValueError(f"rhs must have length {N}")
    return DiscretizedSystem(A=A, b=rhs, n=n, d=1, kind=spec.kind, kernel_dim=kernel_dim)


def discretize_2d_laplacian(n: int, rhs: Optional[np.ndarray] = None) -> DiscretizedSystem:
    _check_n(n)
    T = second_difference(n)
    eye = np.eye(2**n)
    A = np.kron(T, eye) + np.kron(eye, T)
    if rhs is None:
        rhs = build_rhs("constant_free", 4**n, d=2)
    return DiscretizedSystem(A=A, b=np.asarray(rhs, dtype=float), n=n, d=2,
                             kind=OperatorKind.LAPLACE2D, kernel_dim=1)


def discretize(kind: str, n: int, rhs: Optional[np.ndarray] = None) -> DiscretizedSystem:
    """Dispatch on an operator name (``L1``, ``L2``, ``L3``, ``Laplace2D``)."""
    kind = OperatorKind(kind)
    if kind is OperatorKind.LAPLACE2D:
        return discretize_2d_laplacian(n, rhs)
    return discretize_1d(OperatorSpec(kind), n, rhs)


def rescale_to_unit_norm(sys: DiscretizedSystem) -> DiscretizedSystem:
    """Divide ``A`` and ``b`` by the largest singular value of ``A``."""
    s = np.linalg.norm(sys.A, 2)
    if s == 0.0:
        raise ValueError("cannot rescale the zero matrix")
    return replace(sys, A=sys.A / s, b=sys.b / s, norm_scale=sys.norm_scale * s)


def negate(sys: DiscretizedSystem) -> DiscretizedSystem:
    """Flip the sign of the system (turns ``L1`` into a PSD matrix)."""
    return replace(sys, A=-sys.A, b=-sys.b)
