"""Structured unitaries and block encodings.

Circuits here use a local qubit layout documented on each constructor; larger
circuits place them with ``Circuit.compose``.  The data register always
stores its basis index with the first data qubit as the most significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from waveprecond import qsim
from waveprecond.qsim import Circuit, cnot, toffoli


def preconditioner_angles(n: int) -> np.ndarray:
    """``theta_j = arccos(2**-floor(log2 j))`` for ``j = 0 .. 2**n - 1`` (``theta_0 = 0``)."""
    j = np.arange(2**n)
    s = np.zeros(2**n)
    s[1:] = np.floor(np.log2(j[1:]))
    return np.arccos(2.0**-s)


def _sign(sign) -> int:
    if sign in ("+", 1, +1):
        return 1
    if sign in ("-", -1):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def _leading_one_angle(n: int, r: int) -> float:
    # leading one on data qubit r means floor(log2 j) = n - 1 - r
    return float(np.arccos(2.0 ** -(n - 1 - r)))


def u_pm_circuit(n: int, sign="+") -> Circuit:
    """``U^{+/-}|j> = exp(+/- i theta_j)|j>`` on ``n`` data qubits, no ancillas.

    The phase for leading-one position ``r`` is a Phase gate on qubit ``r``
    that fires only when every more significant qubit is 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sg = _sign(sign)
    c = Circuit(n, roles={"data": tuple(range(n))})
    for r in range(n - 1):
        c.append(qsim.phase(r, sg * _leading_one_angle(n, r), [(q, 0) for q in range(r)]))
    return c


def controlled_u_pm(n: int, sign="+", polarity: Optional[int] = None) -> Circuit:
    """``Lambda_pol(U^{+/-})`` with a prefix-AND ladder.

    Layout: qubit 0 control, qubits ``1..n`` data, then ``max(n-2, 0)``
    workspace ancillas.  ``polarity`` defaults to 0 for ``U^+`` and 1 for
    ``U^-``.  Workspace ancilla ``r`` holds ``ctrl AND not x_0 .. not x_r``;
    the ladder costs ``2(n-2)`` Toffolis.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sg = _sign(sign)
    pol = (0 if sg > 0 else 1) if polarity is None else int(polarity)
    data = list(range(1, n + 1))
    ws = list(range(n + 1, n + 1 + max(n - 2, 0)))
    c = Circuit(n + 1 + len(ws), roles={"control": (0,), "data": tuple(data), "workspace": tuple(ws)},
                clean=tuple(ws))
    ladder = []
    for r in range(len(ws)):
        prev = (0, pol) if r == 0 else (ws[r - 1], 1)
        ladder.append(qsim.Gate("X", (ws[r],), (prev, (data[r], 0))))
    c.extend(ladder)
    for r in range(n - 1):
        ctrl = (0, pol) if r == 0 else (ws[r - 1], 1)
        c.append(qsim.phase(data[r], sg * _leading_one_angle(n, r), [ctrl]))
    c.extend(reversed(ladder))
    return c


def select_u_pm(n: int) -> Circuit:
    """``Lambda_1(U^-) Lambda_0(U^+)`` sharing one workspace (same layout as ``controlled_u_pm``)."""
    plus = controlled_u_pm(n, "+", 0)
    minus = controlled_u_pm(n, "-", 1)
    c = Circuit(plus.num_qubits, roles=dict(plus.roles), clean=plus.clean)
    c.compose(plus).compose(minus)
    return c


@dataclass
class BlockEncoding:
    """``A ~= alpha * (<0^a| (x) I) U (|0^a> (x) I)`` to within ``eps``.

    ``ancillas`` are the projected qubits (``a`` of them); ``workspace`` are
    extra qubits the circuit returns clean, which are also held at 0 during
    extraction.
    """

    circuit: Circuit
    data: tuple
    ancillas: tuple
    alpha: float
    eps: float
    workspace: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def a(self) -> int:
        return len(self.ancillas)

    @property
    def n(self) -> int:
        return len(self.data)

    def extract(self, cap: int = qsim.DEFAULT_CAP) -> np.ndarray:
        return qsim.extract_block(self.circuit, self.data, tuple(self.ancillas) + tuple(self.workspace), cap)

    def error(self, A: np.ndarray, cap: int = qsim.DEFAULT_CAP) -> float:
        """``||A - alpha * extraction||_2``."""
        return float(np.linalg.norm(np.asarray(A) - self.alpha * self.extract(cap), 2))

    def verify(self, A: np.ndarray, cap: int = qsim.DEFAULT_CAP) -> bool:
        return self.error(A, cap) <= self.eps + 1e-12

    def queries(self, label: str) -> int:
        return sum(1 for g in self.circuit.gates if g.kind == "UnitaryBlock" and g.label == label)


def u_p_block_encoding(n: int) -> BlockEncoding:
    """(1, 1, 0)-encoding of ``P`` as ``(H (x) I) Lambda_0(U^+) Lambda_1(U^-) (H (x) I)``."""
    sel = select_u_pm(n)
    c = Circuit(sel.num_qubits, roles=dict(sel.roles), clean=sel.clean)
    c.append(qsim.h(0)).compose(sel).append(qsim.h(0))
    return BlockEncoding(c, data=sel.roles["data"], ancillas=(0,), alpha=1.0, eps=0.0,
                         workspace=sel.clean)


def comparator_circuit(n: int) -> Circuit:
    """``|x>|y>|0>|0^n> -> |x>|y>|[x >= y]>|0^n>``.

    Layout: ``x`` on ``0..n-1``, ``y`` on ``n..2n-1``, flag ``2n``, carry
    workspace ``2n+1 .. 3n``.  The flag is the carry out of ``x + not(y) + 1``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = list(range(n))
    ys = list(range(n, 2 * n))
    flag = 2 * n
    carry = list(range(2 * n + 1, 3 * n + 1))  # carry[i] holds c_{i+1}
    bit = lambda reg, i: reg[n - 1 - i]  # noqa: E731  (i = 0 is the LSB)
    fwd = []
    # c_1 = x_0 OR not y_0
    fwd.append(toffoli(bit(xs, 0), bit(ys, 0), carry[0], 0, 1))
    fwd.append(qsim.x(carry[0]))
    for i in range(1, n):
        a, b, cin, out = bit(xs, i), bit(ys, i), carry[i - 1], carry[i]
        # majority(a, not b, cin) as the XOR of the three pairwise ANDs
        fwd.append(toffoli(a, b, out, 1, 0))
        fwd.append(toffoli(a, cin, out))
        fwd.append(toffoli(b, cin, out, 0, 1))
    c = Circuit(3 * n + 1, roles={"x": tuple(xs), "y": tuple(ys), "flag": (flag,), "workspace": tuple(carry)},
                clean=tuple(carry))
    c.extend(fwd).append(cnot(carry[-1], flag)).extend(reversed(fwd))
    return c


def cadd_circuit(n: int) -> Circuit:
    """``|x>|y>|f>|0^n> -> |x>|y>|f>|f ? x : y>``.

    Layout: ``x`` on ``0..n-1``, ``y`` on ``n..2n-1``, flag ``2n``, output ``2n+1 .. 3n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    f = 2 * n
    c = Circuit(3 * n + 1, roles={"x": tuple(range(n)), "y": tuple(range(n, 2 * n)), "flag": (f,),
                                  "out": tuple(range(2 * n + 1, 3 * n + 1))})
    for i in range(n):
        c.append(toffoli(f, i, 2 * n + 1 + i, 1, 1))
        c.append(toffoli(f, n + i, 2 * n + 1 + i, 0, 1))
    return c


def max_circuit(n: int, d: int) -> Circuit:
    """Write ``max(j_1, .., j_d)`` into an output register.

    Layout: inputs ``j_k`` on ``k*n .. (k+1)*n - 1``, output on ``d*n .. d*n+n-1``,
    then clean workspace (comparator carries, one flag per comparison and one
    temporary register per non-final comparison).  Pairs are compared in a
    tournament of ``ceil(log2 d)`` rounds; everything except the final copy
    into the output is uncomputed.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    inputs = [list(range(k * n, (k + 1) * n)) for k in range(d)]
    out = list(range(d * n, (d + 1) * n))
    nxt = (d + 1) * n
    if d == 1:
        c = Circuit(nxt, roles={"inputs": tuple(inputs[0]), "out": tuple(out)})
        for i in range(n):
            c.append(cnot(inputs[0][i], out[i]))
        return c
    carry = list(range(nxt, nxt + n))
    nxt += n
    flags, temps = [], []
    fwd: list = []
    final = None
    level = inputs
    comp, cadd = comparator_circuit(n), cadd_circuit(n)
    while len(level) > 1:
        new_level = []
        for k in range(0, len(level) - 1, 2):
            u, v = level[k], level[k + 1]
            f = nxt
            flags.append(f)
            nxt += 1
            fwd.append((comp, u + v + [f] + carry))
            if len(level) == 2:
                final = (cadd, u + v + [f] + out)
            else:
                t = list(range(nxt, nxt + n))
                nxt += n
                temps.extend(t)
                fwd.append((cadd, u + v + [f] + t))
                new_level.append(t)
        if len(level) % 2:
            new_level.append(level[-1])
        level = new_level if len(level) > 2 else []
    ws = tuple(carry + flags + temps)
    c = Circuit(nxt, roles={"inputs": tuple(q for r in inputs for q in r), "out": tuple(out), "workspace": ws},
                clean=ws)
    for sub, mapping in fwd:
        c.compose(sub, mapping)
    c.compose(final[0], final[1])
    for sub, mapping in reversed(fwd):
        c.compose(sub.inverse(), mapping)
    return c


def u_pm_dD(n: int, d: int, sign="+") -> Circuit:
    """``|j_1..j_d> -> exp(+/- i theta_{j_max}) |j_1..j_d>`` via MAX, ``U^{+/-}``, MAX^dagger.

    Layout: data ``0 .. d*n-1``, then the MAX output register and workspace.
    For ``d = 1`` this is ``u_pm_circuit`` itself.
    """
    if d == 1:
        return u_pm_circuit(n, sign)
    mx = max_circuit(n, d)
    out = mx.roles["out"]
    c = Circuit(mx.num_qubits, roles={"data": tuple(range(d * n)), "out": out, "workspace": mx.clean},
                clean=tuple(out) + mx.clean)
    c.compose(mx).compose(u_pm_circuit(n, sign), out).compose(mx.inverse())
    return c


def select_u_pm_dD(n: int, d: int) -> Circuit:
    """Controlled ``U^{+/-}_dD`` selection: ``Lambda_1(U^-) Lambda_0(U^+)`` on ``d*n`` data qubits.

    Layout: qubit 0 control, data ``1 .. d*n``, then clean workspace.
    """
    if d == 1:
        return select_u_pm(n)
    mx = max_circuit(n, d)
    sel = select_u_pm(n)
    total = 1 + mx.num_qubits + (sel.num_qubits - 1 - n)
    mx_map = [1 + q for q in range(mx.num_qubits)]
    out = [1 + q for q in mx.roles["out"]]
    sel_ws = list(range(1 + mx.num_qubits, total))
    sel_map = [0] + out + sel_ws
    ws = tuple(out) + tuple(1 + q for q in mx.clean) + tuple(sel_ws)
    c = Circuit(total, roles={"control": (0,), "data": tuple(range(1, 1 + d * n)), "workspace": ws}, clean=ws)
    c.compose(mx, mx_map).compose(sel, sel_map).compose(mx.inverse(), mx_map)
    return c


def dilation_unitary(B: np.ndarray) -> np.ndarray:
    """``[[B, sqrt(I - B B^dag)], [sqrt(I - B^dag B), -B^dag]]`` for a contraction ``B``."""
    B = np.asarray(B, dtype=complex)
    U, s, Vh = np.linalg.svd(B)
    if s[0] > 1.0 + 1e-12:
        raise ValueError(f"matrix norm {s[0]:.6g} exceeds 1; increase alpha")
    r = np.sqrt(np.clip(1.0 - s**2, 0.0, None))
    top_right = (U * r) @ U.conj().T
    bottom_left = (Vh.conj().T * r) @ Vh
    return np.block([[B, top_right], [bottom_left, -B.conj().T]])


def dilation_block_encoding(A: np.ndarray, alpha: Optional[float] = None, label: str = "U_A") -> BlockEncoding:
    """Exact one-ancilla encoding of ``A/alpha`` (``alpha`` defaults to ``||A||_2``)."""
    A = np.asarray(A)
    N = A.shape[0]
    n = int(round(np.log2(N)))
    if A.shape != (N, N) or 2**n != N:
        raise ValueError("A must be square with a power-of-two size")
    alpha = float(np.linalg.norm(A, 2)) if alpha is None else float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    U = dilation_unitary(A / alpha)
    c = Circuit(n + 1, roles={"ancilla": (0,), "data": tuple(range(1, n + 1))})
    c.append(qsim.unitary_block(range(n + 1), U, label=label))
    return BlockEncoding(c, data=tuple(range(1, n + 1)), ancillas=(0,), alpha=alpha, eps=1e-10)


def u_ap_block_encoding(U_A: BlockEncoding, W: np.ndarray, n: int) -> BlockEncoding:
    """Encoding of ``A_p = P W A W^T P`` from one use of ``U_A``.

    The two ``U_P`` factors get their own ancilla each: reusing one ancilla
    would mix the discarded ``U^+ - U^-`` branch of the first factor into the
    second.  Layout: data ``0..n-1``, the ``U_A`` ancillas, two ``U_P``
    ancillas, then shared clean workspace.
    """
    W = np.asarray(W)
    if U_A.n != n or W.shape != (2**n, 2**n):
        raise ValueError("U_A, W and n disagree")
    if not np.allclose(W @ W.T, np.eye(2**n), atol=1e-10):
        raise ValueError("W must be orthogonal")
    up = u_p_block_encoding(n)
    data = list(range(n))
    a_anc = list(range(n, n + U_A.a))
    a_ws = list(range(n + U_A.a, n + U_A.a + len(U_A.workspace)))
    nxt = n + U_A.a + len(U_A.workspace)
    p1, p2 = nxt, nxt + 1
    up_ws = list(range(nxt + 2, nxt + 2 + len(up.workspace)))
    total = nxt + 2 + len(up.workspace)

    def up_map(anc):
        m = [0] * up.circuit.num_qubits
        m[0] = anc
        for i, q in enumerate(up.data):
            m[q] = data[i]
        for i, q in enumerate(up.workspace):
            m[q] = up_ws[i]
        return m

    ua_map = [0] * U_A.circuit.num_qubits
    for i, q in enumerate(U_A.data):
        ua_map[q] = data[i]
    for i, q in enumerate(U_A.ancillas):
        ua_map[q] = a_anc[i]
    for i, q in enumerate(U_A.workspace):
        ua_map[q] = a_ws[i]
    c = Circuit(total, roles={"data": tuple(data), "ancillas": tuple(a_anc + [p1, p2])},
                clean=tuple(a_ws + up_ws))
    c.compose(up.circuit, up_map(p1))
    c.append(qsim.unitary_block(data, W.T, label="W^T"))
    c.compose(U_A.circuit, ua_map)
    c.append(qsim.unitary_block(data, W, label="W"))
    c.compose(up.circuit, up_map(p2))
    return BlockEncoding(c, data=tuple(data), ancillas=tuple(a_anc + [p1, p2]), alpha=U_A.alpha,
                         eps=U_A.eps, workspace=tuple(a_ws + up_ws))


def diagonal_of(circuit: Circuit, register: Sequence[int]) -> np.ndarray:
    """Diagonal of a circuit known to be diagonal on ``register`` (other qubits at 0)."""
    q = circuit.num_qubits
    rows = qsim.register_indices(q, list(register))
    cols = np.zeros((2**q, len(rows)), dtype=complex)
    cols[rows, np.arange(len(rows))] = 1.0
    out = qsim.run_batch(circuit, cols)
    return out[rows, np.arange(len(rows))]


def toffoli_count(circuit: Circuit) -> int:
    return circuit.count("Toffoli")
