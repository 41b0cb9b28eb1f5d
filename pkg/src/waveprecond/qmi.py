"""Block encodings of ``A_p^{-1}``.

Two routes:

* ``oracle_dilation`` wraps the exact inverse ``A_p^{-1}/alpha`` in a
  one-ancilla unitary dilation.
* ``qpe_crot`` runs phase estimation of ``exp(i 2 pi A_p)``, rotates a flag
  qubit by ``1/(alpha lambda)`` and uncomputes the phase register.  A
  nonsymmetric ``A_p`` is handled through its Hermitian embedding
  ``[[0, A_p], [A_p^T, 0]]`` on one extra qubit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from waveprecond import qsim
from waveprecond.blockenc import BlockEncoding, dilation_block_encoding
from waveprecond.qsim import Circuit

ROUTES = ("qpe_crot", "oracle_dilation")


@dataclass(frozen=True)
class QmiConfig:
    route: str = "oracle_dilation"
    t: Optional[int] = None
    eps: Optional[float] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"unknown QMI route {self.route!r}")
        if self.route == "qpe_crot" and self.t is None and self.eps is None:
            raise ValueError("qpe_crot needs t or eps")
        if self.t is not None and self.t < 1:
            raise ValueError("t must be >= 1")


def phase_scale(symmetric: bool) -> float:
    """Eigenvalue span per unit of phase: 1 for the SPD route, 4 for the signed embedding."""
    return 1.0 if symmetric else 4.0


def required_bits(kappa_p: float, eps: float, symmetric: bool = True) -> int:
    """Smallest ``t`` with eigenvalue resolution ``scale * 2**-t <= eps/(2 kappa_p)``."""
    return int(np.ceil(np.log2(2.0 * kappa_p * phase_scale(symmetric) / eps)))


def declared_eps(kappa_p: float, t: int, symmetric: bool = True) -> float:
    """Error budget from an eigenvalue resolution ``eps_qpe = eps/(2 kappa_p)``."""
    return 2.0 * kappa_p * phase_scale(symmetric) * 2.0**-t


def qft_circuit(t: int) -> Circuit:
    """``|j> -> 2**(-t/2) sum_k exp(2 pi i j k / 2**t) |k>`` (qubit 0 is the MSB)."""
    c = Circuit(t)
    for i in range(t):
        c.append(qsim.h(i))
        for j in range(i + 1, t):
            c.append(qsim.phase(i, 2 * np.pi / 2 ** (j - i + 1), [(j, 1)]))
    for i in range(t // 2):
        c.append(qsim.swap(i, t - 1 - i))
    return c


def unitary_power(evals: np.ndarray, evecs: np.ndarray, power: int) -> np.ndarray:
    """``exp(i 2 pi power H)`` from an eigendecomposition of Hermitian ``H``."""
    return (evecs * np.exp(2j * np.pi * power * evals)) @ evecs.conj().T


def qpe_circuit(H: np.ndarray, t: int) -> Circuit:
    """Phase estimation of ``U = exp(i 2 pi H)`` for Hermitian ``H``.

    Layout: phase register ``0..t-1`` then the system register.  Controlled
    powers ``U**(2**k)`` are exact ``UnitaryBlock`` oracles.
    """
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ValueError("QPE target must be Hermitian")
    m = int(round(np.log2(H.shape[0])))
    evals, evecs = np.linalg.eigh(H)
    c = Circuit(t + m, roles={"phase": tuple(range(t)), "system": tuple(range(t, t + m))})
    sys_q = list(range(t, t + m))
    for k in range(t):
        c.append(qsim.h(k))
    for k in range(t):
        power = 2 ** (t - 1 - k)
        c.append(qsim.unitary_block(sys_q, unitary_power(evals, evecs, power), [(k, 1)], label="U_pow"))
    c.compose(qft_circuit(t).inverse(), range(t))
    return c


def decode_eigenvalue(k: np.ndarray, t: int, symmetric: bool = True) -> np.ndarray:
    """Eigenvalue estimate for register value ``k``.

    SPD route: ``k/2**t`` with ``k = 0`` read as 1 (spectrum in (0, 1]).
    Signed route: phase ``lambda/4`` in ``[-1/4, 1/4]``, two's complement, ``k = 0`` is 0.
    """
    k = np.asarray(k, dtype=float)
    T = 2.0**t
    if symmetric:
        return np.where(k == 0, 1.0, k / T)
    signed = np.where(k >= T / 2, k - T, k)
    return 4.0 * signed / T


def crot_amplitudes(t: int, alpha: float, symmetric: bool = True) -> np.ndarray:
    """Flag ``|0>`` amplitude ``1/(alpha lambda)`` per register value, clipped to [-1, 1]."""
    lam = decode_eigenvalue(np.arange(2**t), t, symmetric)
    if symmetric and np.any(lam == 0):
        raise ValueError("a reachable eigenvalue estimate is zero")
    with np.errstate(divide="ignore"):
        f = np.where(lam == 0, 0.0, 1.0 / (alpha * np.where(lam == 0, 1.0, lam)))
    return np.clip(f, -1.0, 1.0)


def uniformly_controlled_ry(angles: np.ndarray, controls: list, target: int) -> list:
    """Gray-code decomposition: ``len(angles)`` RotY gates and as many CNOTs.

    Applies ``RotY(angles[k])`` to ``target`` when the control register (first
    control = MSB) holds ``k``.
    """
    t = len(controls)
    K = 2**t
    if len(angles) != K:
        raise ValueError("need one angle per control pattern")
    gray = np.arange(K) ^ (np.arange(K) >> 1)
    # theta_k = sum_i (-1)^{popcount(k & g_i)} a_i  ->  a = M^T theta / K
    pc = np.array([[bin(k & g).count("1") & 1 for g in gray] for k in range(K)])
    M = 1.0 - 2.0 * pc
    a = M.T @ np.asarray(angles, dtype=float) / K
    gates = []
    for i in range(K):
        gates.append(qsim.rot_y(target, a[i]))
        changed = int(gray[i] ^ gray[(i + 1) % K])
        b = changed.bit_length() - 1
        gates.append(qsim.cnot(controls[t - 1 - b], target))
    return gates


def crot_circuit(t: int, alpha: float, symmetric: bool = True) -> Circuit:
    """Layout: flag ``0``, phase register ``1..t``."""
    f = crot_amplitudes(t, alpha, symmetric)
    c = Circuit(t + 1, roles={"flag": (0,), "phase": tuple(range(1, t + 1))})
    c.extend(uniformly_controlled_ry(np.arccos(f), list(range(1, t + 1)), 0))
    return c


def check_spectrum(A_p: np.ndarray) -> tuple[bool, np.ndarray]:
    """(is_symmetric, singular values) with all singular values required in (0, 1]."""
    A_p = np.asarray(A_p, dtype=float)
    sym = bool(np.allclose(A_p, A_p.T, atol=1e-12 * max(1.0, np.abs(A_p).max())))
    s = np.linalg.svd(A_p, compute_uv=False)
    if s[-1] <= 1e-14 or s[0] > 1.0 + 1e-10:
        raise ValueError(f"singular values of A_p must lie in (0, 1], got [{s[-1]:.3g}, {s[0]:.3g}]")
    if sym and np.linalg.eigvalsh(A_p)[0] <= 0:
        sym = False  # symmetric but indefinite: use the signed route
    return sym, s


def build_qmi(A_p: np.ndarray, cfg: QmiConfig) -> BlockEncoding:
    """Encode ``A_p^{-1}/alpha``; ``alpha`` defaults to ``||A_p^{-1}|| = 1/sigma_min``."""
    A_p = np.asarray(A_p, dtype=float)
    symmetric, s = check_spectrum(A_p)
    inv_norm = 1.0 / s[-1]
    alpha = inv_norm if cfg.alpha is None else float(cfg.alpha)
    if alpha < inv_norm * (1 - 1e-12):
        raise ValueError(f"alpha={alpha:.6g} is below ||A_p^-1||={inv_norm:.6g}")
    kappa = s[0] / s[-1]
    if cfg.route == "oracle_dilation":
        be = dilation_block_encoding(np.linalg.inv(A_p), alpha, label="QMI")
        be.meta.update(route="oracle_dilation", kappa_p=kappa)
        return be
    t = cfg.t
    if cfg.eps is not None:
        need = required_bits(kappa, cfg.eps, symmetric)
        if t is None:
            t = need
        elif t < need:
            raise ValueError(f"t={t} below the {need} bits needed for eps={cfg.eps}")
    # relative budget; the (alpha, a, eps) contract is stated unnormalized
    eps_rel = declared_eps(kappa, t, symmetric) if cfg.eps is None else float(cfg.eps)
    N = A_p.shape[0]
    m = int(round(np.log2(N)))
    if symmetric:
        H = A_p
        emb = []
    else:
        # eigenvalues in [-1, 1] become phases in [-1/4, 1/4]
        H = np.block([[np.zeros((N, N)), A_p], [A_p.T, np.zeros((N, N))]]) / phase_scale(False)
        emb = [1]
    # layout: flag, [embedding], phase register, data
    flag = 0
    phase = list(range(1 + len(emb), 1 + len(emb) + t))
    data = list(range(1 + len(emb) + t, 1 + len(emb) + t + m))
    q = data[-1] + 1
    qpe = qpe_circuit(H, t)
    qpe_map = phase + emb + data
    c = Circuit(q, roles={"flag": (flag,), "embedding": tuple(emb), "phase": tuple(phase), "data": tuple(data)})
    c.compose(qpe, qpe_map)
    c.compose(crot_circuit(t, alpha, symmetric), [flag] + phase)
    c.compose(qpe.inverse(), qpe_map)
    if emb:
        # H^{-1} maps the upper block to the lower one; fold it back
        c.append(qsim.x(emb[0]))
    be = BlockEncoding(c, data=tuple(data), ancillas=tuple([flag] + emb + phase), alpha=alpha,
                       eps=alpha * eps_rel)
    be.meta.update(route="qpe_crot", t=t, kappa_p=kappa, symmetric=symmetric, eps_rel=eps_rel)
    return be


def measured_error(be: BlockEncoding, A_p: np.ndarray, cap: int = 20) -> float:
    """``||A_p^{-1} - alpha * extraction||_2``, the quantity bounded by ``be.eps``."""
    return be.error(np.linalg.inv(np.asarray(A_p)), cap)


def report_row(be: BlockEncoding, A_p: np.ndarray, cap: int = 20) -> dict:
    return {"route": be.meta.get("route"), "t": be.meta.get("t", ""), "alpha": be.alpha,
            "declared_eps": be.eps, "measured_err": measured_error(be, A_p, cap)}
