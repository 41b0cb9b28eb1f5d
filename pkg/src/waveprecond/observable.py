"""Sparse observables given by location/value oracles, and the extended observable.

An ``s``-sparse observable on ``n`` qubits is specified by

* ``loc(j, l)``: column of the ``l``-th stored entry in row ``j`` (``l < s``),
* ``val(j, k)``: the entry ``M[j, k]``.

Rows with fewer than ``s`` nonzeros are padded with distinct columns whose
value is 0, so ``loc`` stays injective in ``l``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from waveprecond.qsim import StateVector


@dataclass
class SparseObservable:
    n: int
    s: int
    loc_fn: Callable[[int, int], int]
    val_fn: Callable[[int, int], float]
    name: str = "M"
    loc_queries: int = field(default=0, init=False)
    val_queries: int = field(default=0, init=False)

    @property
    def N(self) -> int:
        return 2**self.n

    def loc(self, j: int, ell: int) -> int:
        if not 0 <= ell < self.s:
            raise IndexError("sparsity index out of range")
        self.loc_queries += 1
        return int(self.loc_fn(j, ell))

    def val(self, j: int, k: int) -> float:
        self.val_queries += 1
        return float(self.val_fn(j, k))

    def reset_counters(self) -> None:
        self.loc_queries = self.val_queries = 0

    def dense(self) -> np.ndarray:
        """Dense matrix assembled from the oracles (counters are left unchanged)."""
        M = np.zeros((self.N, self.N))
        for j in range(self.N):
            for ell in range(self.s):
                k = int(self.loc_fn(j, ell))
                M[j, k] = self.val_fn(j, k)
        return M


@dataclass
class ExtendedObservable:
    """``M' = sum_{abcd} |ab><cd| (x) M`` answered through the base oracles.

    Rows and columns are indexed as ``(2a + b) N + j``; each extended query
    costs exactly one base query.
    """

    base: SparseObservable

    @property
    def n(self) -> int:
        return self.base.n + 2

    @property
    def s(self) -> int:
        return 4 * self.base.s

    def loc(self, row: int, ell: int) -> int:
        N = self.base.N
        j = row % N
        cd, l0 = divmod(ell, self.base.s)
        return cd * N + self.base.loc(j, l0)

    def val(self, row: int, col: int) -> float:
        N = self.base.N
        return self.base.val(row % N, col % N)

    def dense(self) -> np.ndarray:
        return np.kron(np.ones((4, 4)), self.base.dense())


def extend(M: SparseObservable) -> ExtendedObservable:
    return ExtendedObservable(M)


def expectation(state, Mp) -> float:
    """``<psi|M|psi>`` by walking the sparse oracles (no dense matrix)."""
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    if len(psi) != 2**Mp.n:
        raise ValueError("state size does not match the observable")
    total = 0.0 + 0.0j
    for r in np.flatnonzero(np.abs(psi) > 0):
        acc = 0.0 + 0.0j
        for ell in range(Mp.s):
            col = Mp.loc(r, ell)
            if psi[col] != 0:
                acc += Mp.val(r, col) * psi[col]
        total += np.conj(psi[r]) * acc
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise ValueError(f"expectation has imaginary part {total.imag:.3g}; observable not symmetric")
    return float(total.real)


# built-in library

def identity(n: int) -> SparseObservable:
    return SparseObservable(n, 1, lambda j, ell: j, lambda j, k: 1.0 if j == k else 0.0, name="identity")


def diagonal(n: int, values: Sequence[float], name: str = "diagonal") -> SparseObservable:
    v = np.asarray(values, dtype=float)
    if v.shape != (2**n,):
        raise ValueError("need one value per grid point")
    return SparseObservable(n, 1, lambda j, ell: j, lambda j, k: float(v[j]) if j == k else 0.0, name=name)


def grid_function(n: int, f: Callable[[np.ndarray], np.ndarray], d: int = 1, name: str = "grid_function"):
    """Diagonal observable sampling ``f`` on the ``[0,1)^d`` grid (``f`` takes ``d`` coordinate arrays)."""
    g = np.arange(2**n) / 2**n
    mesh = np.meshgrid(*([g] * d), indexing="ij")
    return diagonal(n * d, np.asarray(f(*mesh), dtype=float).ravel(), name=name)


def nearest_neighbor(n: int, periodic: bool = True) -> SparseObservable:
    """``(1/2) sum_j (|j><j+1| + |j+1><j|)``, i.e. the correlator ``u_j u_{j+1}``."""
    N = 2**n

    def neighbors(j):
        out = [(j + 1) % N, (j - 1) % N] if periodic else [j + 1, j - 1]
        out = [k for k in out if 0 <= k < N]
        return list(dict.fromkeys(out))

    def loc(j, ell):
        cols = neighbors(j)
        if ell < len(cols):
            return cols[ell]
        # pad with columns not already used; their value is 0
        pad = [k for k in range(N) if k not in cols]
        return pad[ell - len(cols)]

    def val(j, k):
        return 0.5 if k in neighbors(j) else 0.0

    return SparseObservable(n, 2, loc, val, name="nearest_neighbor")


def from_dense(M: np.ndarray, name: str = "dense") -> SparseObservable:
    """Wrap a real symmetric matrix; sparsity is its largest row count."""
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, M.T, atol=1e-12):
        raise ValueError("observable must be symmetric")
    N = M.shape[0]
    n = int(round(np.log2(N)))
    rows = [list(np.flatnonzero(M[j])) for j in range(N)]
    s = max(1, max(len(r) for r in rows))
    padded = []
    for r in rows:
        extra = [k for k in range(N) if k not in r][: s - len(r)]
        padded.append(r + extra)
    return SparseObservable(n, s, lambda j, ell: padded[j][ell], lambda j, k: M[j, k], name=name)


def library(n: int, d: int = 1) -> dict:
    """The three standard observables: identity, a diagonal grid function, a neighbour correlator."""
    obs = {"identity": identity(n * d),
           "grid_cos": grid_function(n, lambda *xs: np.prod([np.cos(2 * np.pi * x) for x in xs], axis=0) + 2.0,
                                     d, name="grid_cos")}
    if d == 1:
        obs["nearest_neighbor"] = nearest_neighbor(n)
    else:
        T = nearest_neighbor(n).dense()
        obs["nearest_neighbor"] = from_dense(np.kron(T, np.eye(2**n)), name="nearest_neighbor_x")
    return obs
