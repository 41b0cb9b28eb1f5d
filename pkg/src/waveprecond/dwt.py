"""Periodized multi-level discrete wavelet transforms as explicit matrices.

Row layout of a full-pyramid transform on ``N = 2**n`` samples::

    row 0               coarsest scaling coefficient
    rows [2**s, 2**(s+1)) detail coefficients at scale s, s = 0 .. n-1

which lines up with the block structure of the diagonal preconditioner.
Filter tables come from PyWavelets; the transform itself is built here.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import pywt

MAX_TRANSFORM_SIZE = 2**14


class Family(str, Enum):
    DAUBECHIES = "Daubechies"
    SYMLET = "Symlet"
    COIFLET = "Coiflet"
    CDF97 = "CDF97"
    CDF53 = "CDF53"


_SUPPORTED = {
    Family.DAUBECHIES: range(1, 9),
    Family.SYMLET: range(2, 9),
    Family.COIFLET: range(1, 6),
}
_PYWT_PREFIX = {Family.DAUBECHIES: "db", Family.SYMLET: "sym", Family.COIFLET: "coif"}
_PYWT_BIOR = {Family.CDF97: "bior4.4", Family.CDF53: "bior2.2"}


@dataclass(frozen=True)
class WaveletSpec:
    """Two-channel filter bank.

    Filters follow the convolution convention of PyWavelets: the analysis
    step computes ``a_k = sum_m dec_lo[K-1-m] x[2k+m]`` (circularly).
    """

    family: Family
    index: Optional[int]
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray
    orthogonal: bool

    @property
    def name(self) -> str:
        if self.family in _PYWT_PREFIX:
            return f"{_PYWT_PREFIX[self.family]}{self.index}"
        return self.family.value

    @property
    def lowpass(self) -> np.ndarray:
        """Analysis low-pass filter ``h`` in the ``a_k = sum h_m x_{2k+m}`` form."""
        return self.dec_lo[::-1]

    @property
    def filter_length(self) -> int:
        return len(self.dec_lo)


def filter_coefficients(family, index: Optional[int] = None) -> WaveletSpec:
    family = Family(family)
    if family in _SUPPORTED:
        if index not in _SUPPORTED[family]:
            lo, hi = _SUPPORTED[family][0], _SUPPORTED[family][-1]
            raise ValueError(f"{family.value} index must be in {lo}..{hi}, got {index!r}")
        wav = pywt.Wavelet(f"{_PYWT_PREFIX[family]}{index}")
        orthogonal = True
    else:
        wav = pywt.Wavelet(_PYWT_BIOR[family])
        index = None
        orthogonal = False
    arrs = [np.asarray(f, dtype=float) for f in (wav.dec_lo, wav.dec_hi, wav.rec_lo, wav.rec_hi)]
    return WaveletSpec(family, index, *arrs, orthogonal=orthogonal)


def wavelet_from_name(name: str) -> WaveletSpec:
    """Parse short names: ``db3``, ``sym4``, ``coif3``, ``CDF97``, ``CDF53`` (also ``haar``)."""
    key = name.strip().lower().replace("/", "").replace("-", "")
    if key == "haar":
        return filter_coefficients(Family.DAUBECHIES, 1)
    if key in ("cdf97", "bior4.4"):
        return filter_coefficients(Family.CDF97)
    if key in ("cdf53", "bior2.2"):
        return filter_coefficients(Family.CDF53)
    m = re.fullmatch(r"(db|sym|coif)(\d+)", key)
    if not m:
        raise ValueError(f"unknown wavelet {name!r}")
    family = {"db": Family.DAUBECHIES, "sym": Family.SYMLET, "coif": Family.COIFLET}[m.group(1)]
    return filter_coefficients(family, int(m.group(2)))


def _level_matrix(lo: np.ndarray, hi: np.ndarray, L: int) -> np.ndarray:
    """One periodized analysis step on a block of length L.

    Taps that run past the block wrap around and accumulate.
    """
    M = np.zeros((L, L))
    half = L // 2
    K = len(lo)
    rows = np.arange(half)
    for m in range(K):
        cols = (2 * rows + m) % L
        np.add.at(M, (rows, cols), lo[K - 1 - m])
        np.add.at(M, (half + rows, cols), hi[K - 1 - m])
    return M


@dataclass(frozen=True)
class TransformMatrix:
    W: np.ndarray
    inverse: np.ndarray
    levels: int
    spec: WaveletSpec

    @property
    def n(self) -> int:
        return int(np.log2(self.W.shape[0]))

    @property
    def orthogonal(self) -> bool:
        return self.spec.orthogonal

    def block_slices(self) -> list[slice]:
        """Row ranges of the coarse block followed by each detail block."""
        N = self.W.shape[0]
        coarse = N >> self.levels
        out = [slice(0, coarse)]
        start = coarse
        while start < N:
            out.append(slice(start, 2 * start))
            start *= 2
        return out


def build_transform_matrix(spec: WaveletSpec, n: int, levels: Optional[int] = None) -> TransformMatrix:
    """Compose ``levels`` single-level analysis steps (default: full pyramid)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    levels = n if levels is None else levels
    if not 1 <= levels <= n:
        raise ValueError(f"levels must be in 1..{n}, got {levels}")
    N = 2**n
    W = np.eye(N)
    S = np.eye(N)
    L = N
    for _ in range(levels):
        # each step only touches the current approximation block
        W[:L] = _level_matrix(spec.dec_lo, spec.dec_hi, L) @ W[:L]
        # synthesis step is the transposed analysis layout built from rec filters
        S[:, :L] = S[:, :L] @ _level_matrix(spec.rec_lo[::-1], spec.rec_hi[::-1], L).T
        L //= 2
    return TransformMatrix(W=W, inverse=S, levels=levels, spec=spec)


def analyze(x: np.ndarray, spec: WaveletSpec, levels: Optional[int] = None) -> np.ndarray:
    """Cascade filter-bank algorithm on a vector (no matrices involved)."""
    x = np.asarray(x, dtype=float)
    N = len(x)
    n = int(np.log2(N))
    levels = n if levels is None else levels
    lo, hi = spec.dec_lo[::-1], spec.dec_hi[::-1]
    approx = x
    details = []
    for _ in range(levels):
        L = len(approx)
        idx = (2 * np.arange(L // 2)[:, None] + np.arange(len(lo))[None, :]) % L
        windows = approx[idx]
        details.append(windows @ hi)
        approx = windows @ lo
    return np.concatenate([approx] + details[::-1])


def transform_dD(W: TransformMatrix | np.ndarray, d: int, max_size: int = MAX_TRANSFORM_SIZE) -> np.ndarray:
    """``W`` tensored with itself ``d`` times, index order ``(j_1, ..., j_d)``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    M = W.W if isinstance(W, TransformMatrix) else np.asarray(W)
    if M.shape[0] ** d > max_size:
        raise ValueError(f"transform of size {M.shape[0]}^{d} exceeds cap {max_size}")
    out = M
    for _ in range(d - 1):
        out = np.kron(out, M)
    return out
