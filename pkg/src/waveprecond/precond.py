"""Diagonal wavelet preconditioner, preconditioned systems and condition numbers."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from waveprecond import dwt, fdm
from waveprecond.dwt import TransformMatrix
from waveprecond.fdm import DiscretizedSystem

MAX_SIZE = 2**14
SWEEP_COLUMNS = ("operator", "wavelet", "n", "N", "d", "kappa_raw", "kappa_precond")


def scale_index(j: np.ndarray) -> np.ndarray:
    """``floor(log2 j)`` with 0 mapped to 0."""
    j = np.asarray(j)
    out = np.zeros(j.shape, dtype=int)
    nz = j > 0
    out[nz] = np.floor(np.log2(j[nz])).astype(int)
    return out


@dataclass(frozen=True)
class Preconditioner:
    diag: np.ndarray
    n: int
    d: int

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def inverse_diag(self) -> np.ndarray:
        return 1.0 / self.diag


def build_preconditioner(n: int, d: int = 1, max_size: int = MAX_SIZE) -> Preconditioner:
    """Entries ``2**-floor(log2 j_max)`` over ``(j_1, ..., j_d)``, 1 where ``j_max = 0``."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    N = 2**n
    if N**d > max_size:
        raise ValueError(f"preconditioner of size {N}^{d} exceeds cap {max_size}")
    j = np.arange(N)
    jmax = j
    for _ in range(d - 1):
        jmax = np.maximum.outer(jmax, j).ravel()
    return Preconditioner(diag=2.0 ** (-scale_index(jmax)), n=n, d=d)


def _complement_basis(kernel: np.ndarray) -> np.ndarray:
    k = np.asarray(kernel, dtype=float).reshape(1, -1)
    return null_space(k / np.linalg.norm(k))


def singular_values(A: np.ndarray, kernel_policy="none", kernel: Optional[np.ndarray] = None,
                    tau: float = 1e-10) -> np.ndarray:
    """Singular values of ``A`` after applying the kernel policy (descending)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("condition number needs a square matrix")
    if isinstance(kernel_policy, tuple):
        kernel_policy, tau = kernel_policy
    if kernel_policy == "deflate_constant":
        if kernel is None:
            kernel = np.ones(A.shape[0])
        s = np.linalg.svd(A @ _complement_basis(kernel), compute_uv=False)
    else:
        s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("zero matrix has no condition number")
    if kernel_policy == "threshold":
        s = s[s >= tau * s[0]]
    elif kernel_policy not in ("none", "deflate_constant"):
        raise ValueError(f"unknown kernel policy {kernel_policy!r}")
    if s[-1] <= 0.0:
        raise ValueError("all singular values fall below the threshold")
    return s


def condition_number(A: np.ndarray, kernel_policy="none", kernel: Optional[np.ndarray] = None,
                     tau: float = 1e-10) -> float:
    """``sigma_max / sigma_min`` from a full SVD.

    ``kernel_policy`` is ``"none"``, ``"deflate_constant"`` (drop the direction
    ``kernel``, the constant vector by default) or ``"threshold"`` / ``("threshold", tau)``
    (ignore singular values below ``tau * sigma_max``).
    """
    s = singular_values(A, kernel_policy, kernel, tau)
    return float(s[0] / s[-1])


@dataclass(frozen=True)
class PreconditionedSystem:
    """``A_p = P W A W^T P`` with ``b_p = P W b``.

    For biorthogonal transforms the Galerkin form ``S^T A S`` with
    ``S = W^{-1}`` replaces ``W A W^T``.  When the parent system has a known
    kernel, ``kernel`` holds the corresponding null vector of ``A_p`` and
    ``A_solve`` is the deflated (invertible) matrix used by the solvers.
    """

    A_p: np.ndarray
    b_p: np.ndarray
    alpha: float
    kappa_p: float
    sigma_max: float
    sigma_min: float
    system: DiscretizedSystem
    transform: TransformMatrix
    precond: Preconditioner
    W_full: np.ndarray
    S_full: np.ndarray
    kernel: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.A_p.shape[0]

    @property
    def A_solve(self) -> np.ndarray:
        if self.kernel is None:
            return self.A_p
        k = self.kernel
        # fill the null direction with sigma_max: keeps both the norm and kappa
        return self.A_p + self.sigma_max * np.outer(k, k)

    def unprecondition(self, u_p: np.ndarray) -> np.ndarray:
        """Map a solution of ``A_p u_p = b_p`` back to the grid."""
        return self.S_full @ (self.precond.diag * u_p)


def precondition(sys: DiscretizedSystem, W: TransformMatrix, P: Preconditioner,
                 kernel_policy: str = "deflate_constant", alpha_inflation: float = 1.0) -> PreconditionedSystem:
    if P.d != sys.d or P.n != sys.n or W.n != sys.n:
        raise ValueError("system, transform and preconditioner sizes disagree")
    Wd = dwt.transform_dD(W.W, sys.d)
    Sd = Wd.T if W.orthogonal else dwt.transform_dD(W.inverse, sys.d)
    p = P.diag
    A_w = Sd.T @ sys.A @ Sd
    A_p = p[:, None] * A_w * p[None, :]
    b_p = p * (Sd.T @ sys.b)
    kernel = None
    if sys.kernel_dim and kernel_policy == "deflate_constant":
        kernel = (Wd @ sys.kernel_vector()) / p
        kernel = kernel / np.linalg.norm(kernel)
    policy = "none" if kernel_policy == "deflate_constant" and kernel is None else kernel_policy
    s = singular_values(A_p, policy, kernel)
    return PreconditionedSystem(
        A_p=A_p, b_p=b_p, alpha=alpha_inflation / s[-1], kappa_p=float(s[0] / s[-1]),
        sigma_max=float(s[0]), sigma_min=float(s[-1]), system=sys, transform=W, precond=P,
        W_full=Wd, S_full=Sd, kernel=kernel,
    )


def _sweep_row(args) -> dict:
    operator, wavelet, n, kernel_policy = args
    sys = fdm.discretize(operator, n)
    W = dwt.build_transform_matrix(dwt.wavelet_from_name(wavelet), n)
    P = build_preconditioner(n, sys.d)
    raw_policy = kernel_policy if sys.kernel_dim else "none"
    kappa_raw = condition_number(sys.A, raw_policy, sys.kernel_vector())
    pre = precondition(sys, W, P, kernel_policy=kernel_policy)
    return {
        "operator": str(sys.kind.value), "wavelet": wavelet, "n": n, "N": sys.N, "d": sys.d,
        "kappa_raw": kappa_raw, "kappa_precond": pre.kappa_p,
    }


def sweep_condition_numbers(operators: Sequence[str], wavelets: Sequence[str], n_range: Iterable[int],
                            kernel_policy: str = "deflate_constant", jobs: int = 1) -> list[dict]:
    """Rows ``(operator, wavelet, n, N, d, kappa_raw, kappa_precond)`` in input order.

    The dimension ``d`` follows from the operator (``Laplace2D`` is 2D).
    """
    cells = [(op, w, n, kernel_policy) for op in operators for w in wavelets for n in n_range]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_row, cells))
    return [_sweep_row(c) for c in cells]


def sweep_to_csv(rows: list[dict], header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([r["operator"], r["wavelet"], r["n"], r["N"], r["d"],
                         repr(float(r["kappa_raw"])), repr(float(r["kappa_precond"]))])
    return buf.getvalue()


def loglog_slope(xs: Sequence[float], ys: Sequence[float], base: float = 2.0) -> float:
    """Least-squares slope of ``log(ys)`` against ``log(xs)``."""
    lx = np.log(np.asarray(xs, dtype=float)) / np.log(base)
    ly = np.log(np.asarray(ys, dtype=float)) / np.log(base)
    return float(np.polyfit(lx, ly, 1)[0])
