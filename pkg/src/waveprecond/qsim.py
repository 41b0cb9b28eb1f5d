"""Dense statevector simulator.

Qubit 0 is the most significant bit of a basis index.  States are stored as
complex vectors of length ``2**q``; internally they are reshaped to one axis
per qubit plus a trailing batch axis, which lets a whole set of basis columns
run through a circuit at once (used for matrix extraction).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

DEFAULT_CAP = 14
_SQRT1_2 = 1.0 / np.sqrt(2.0)

KINDS = ("H", "X", "Y", "Z", "Phase", "RotZ", "RotY", "Swap", "UnitaryBlock")


def _single_qubit_matrix(kind: str, param: Optional[float]) -> np.ndarray:
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2
    if kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == "Y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if kind == "Z":
        return np.diag([1.0, -1.0]).astype(complex)
    if kind == "Phase":
        return np.diag([1.0, np.exp(1j * param)])
    if kind == "RotZ":
        # exp(i theta Z)
        return np.diag([np.exp(1j * param), np.exp(-1j * param)])
    if kind == "RotY":
        # exp(-i theta Y): |0> -> cos|0> + sin|1>
        c, s = np.cos(param), np.sin(param)
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise ValueError(f"unknown single-qubit gate {kind!r}")


_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


@dataclass(frozen=True)
class Gate:
    """One gate: ``kind`` on ``targets``, conditioned on ``controls``.

    ``controls`` holds ``(qubit, polarity)`` pairs; polarity 0 means the gate
    fires when that qubit is ``|0>``.  For ``UnitaryBlock`` the first target is
    the most significant qubit of ``matrix``.
    """

    kind: str
    targets: tuple
    controls: tuple = ()
    param: Optional[float] = None
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple((int(q), int(p)) for q, p in self.controls))
        qs = list(self.targets) + [q for q, _ in self.controls]
        if len(set(qs)) != len(qs):
            raise ValueError("control and target qubits must be distinct")
        if any(p not in (0, 1) for _, p in self.controls):
            raise ValueError("control polarity must be 0 or 1")
        if self.kind in ("Phase", "RotZ", "RotY") and self.param is None:
            raise ValueError(f"{self.kind} needs an angle")
        if self.kind == "Swap" and len(self.targets) != 2:
            raise ValueError("Swap acts on two qubits")
        if self.kind == "UnitaryBlock":
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2 ** len(self.targets),) * 2:
                raise ValueError("UnitaryBlock matrix does not match its targets")
            if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=1e-10):
                raise ValueError("UnitaryBlock matrix is not unitary")
            object.__setattr__(self, "matrix", m)
        elif self.kind != "Swap" and len(self.targets) != 1:
            raise ValueError(f"{self.kind} acts on one qubit")

    @property
    def qubits(self) -> tuple:
        return self.targets + tuple(q for q, _ in self.controls)

    def unitary(self) -> np.ndarray:
        """Matrix on the target qubits only (controls not included)."""
        if self.kind == "UnitaryBlock":
            return self.matrix
        if self.kind == "Swap":
            return _SWAP
        return _single_qubit_matrix(self.kind, self.param)

    def inverse(self) -> "Gate":
        if self.kind in ("Phase", "RotZ", "RotY"):
            return Gate(self.kind, self.targets, self.controls, -self.param, label=self.label)
        if self.kind == "Y":
            return self
        if self.kind == "UnitaryBlock":
            return Gate(self.kind, self.targets, self.controls, matrix=self.matrix.conj().T,
                        label=self.label)
        return self

    def remap(self, mapping: Sequence[int]) -> "Gate":
        return Gate(self.kind, tuple(mapping[t] for t in self.targets),
                    tuple((mapping[q], p) for q, p in self.controls), self.param, self.matrix, self.label)

    def with_control(self, qubit: int, polarity: int = 1) -> "Gate":
        return Gate(self.kind, self.targets, self.controls + ((qubit, polarity),), self.param,
                    self.matrix, self.label)

    def census_key(self) -> str:
        """Name used by gate censuses: X with 1 control is CNOT, with 2 a Toffoli."""
        nc = len(self.controls)
        if self.kind == "X":
            return {0: "X", 1: "CNOT", 2: "Toffoli"}.get(nc, f"MCX{nc}")
        if self.kind == "Phase" and nc >= 2:
            return "MultiControlledPhase"
        if self.kind == "UnitaryBlock":
            return f"UnitaryBlock[{self.label}]" if self.label else "UnitaryBlock"
        return f"C{nc}-{self.kind}" if nc else self.kind


# convenience constructors
def h(q):
    return Gate("H", (q,))


def x(q, controls=()):
    return Gate("X", (q,), tuple(controls))


def z(q, controls=()):
    return Gate("Z", (q,), tuple(controls))


def cnot(c, t, polarity=1):
    return Gate("X", (t,), ((c, polarity),))


def toffoli(c1, c2, t, p1=1, p2=1):
    return Gate("X", (t,), ((c1, p1), (c2, p2)))


def phase(q, theta, controls=()):
    return Gate("Phase", (q,), tuple(controls), float(theta))


def rot_z(q, theta, controls=()):
    return Gate("RotZ", (q,), tuple(controls), float(theta))


def rot_y(q, theta, controls=()):
    return Gate("RotY", (q,), tuple(controls), float(theta))


def swap(a, b):
    return Gate("Swap", (a, b))


def unitary_block(qubits, matrix, controls=(), label=""):
    return Gate("UnitaryBlock", tuple(qubits), tuple(controls), matrix=matrix, label=label)


@dataclass
class Circuit:
    """Ordered gate list on ``num_qubits`` qubits with named qubit roles.

    ``roles`` maps a role name to a tuple of qubits; ``clean`` lists ancillas
    that the circuit promises to return to ``|0>``.
    """

    num_qubits: int
    gates: list = field(default_factory=list)
    roles: dict = field(default_factory=dict)
    clean: tuple = ()

    def append(self, gate: Gate) -> "Circuit":
        if max(gate.qubits) >= self.num_qubits or min(gate.qubits) < 0:
            raise IndexError(f"gate {gate.kind} touches a qubit outside 0..{self.num_qubits - 1}")
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def compose(self, other: "Circuit", mapping: Optional[Sequence[int]] = None) -> "Circuit":
        """Append ``other`` with its qubit ``i`` placed on ``mapping[i]``."""
        mapping = range(other.num_qubits) if mapping is None else list(mapping)
        if len(mapping) != other.num_qubits:
            raise ValueError("mapping must cover every qubit of the sub-circuit")
        return self.extend(g.remap(mapping) for g in other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, [g.inverse() for g in reversed(self.gates)],
                       dict(self.roles), self.clean)

    def controlled(self, qubit: int, polarity: int = 1) -> "Circuit":
        """Every gate gains one extra control (qubit must be free in this circuit)."""
        n = max(self.num_qubits, qubit + 1)
        return Circuit(n, [g.with_control(qubit, polarity) for g in self.gates], dict(self.roles), self.clean)

    def census(self) -> Counter:
        return Counter(g.census_key() for g in self.gates)

    def count(self, key: str) -> int:
        return self.census()[key]

    def __len__(self) -> int:
        return len(self.gates)


@dataclass
class StateVector:
    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError("amplitude vector length must be 2**num_qubits")

    @classmethod
    def zero(cls, q: int) -> "StateVector":
        return cls.basis(q, 0)

    @classmethod
    def basis(cls, q: int, index: int) -> "StateVector":
        a = np.zeros(2**q, dtype=complex)
        a[index] = 1.0
        return cls(a, q)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probability(self, pattern: Mapping[int, int]) -> float:
        return success_probability(self, pattern)

    def project(self, pattern: Mapping[int, int]) -> np.ndarray:
        """Amplitudes of the remaining qubits with ``pattern`` fixed (unnormalized)."""
        return _project(self.amplitudes, self.num_qubits, pattern)


def _project(vec: np.ndarray, q: int, pattern: Mapping[int, int]) -> np.ndarray:
    t = vec.reshape((2,) * q + vec.shape[1:])
    idx = [slice(None)] * q
    for qb, v in pattern.items():
        idx[qb] = int(v)
    out = t[tuple(idx)]
    rest = q - len(pattern)
    return out.reshape((2**rest,) + vec.shape[1:])


def _apply(psi: np.ndarray, q: int, gate: Gate) -> None:
    """Apply ``gate`` in place to ``psi`` of shape ``(2,)*q + (batch,)``."""
    idx = [slice(None)] * q
    for c, pol in gate.controls:
        idx[c] = pol
    idx = tuple(idx)
    sub = psi[idx] if gate.controls else psi
    # position of each target inside the control-sliced view
    ctrl = sorted(c for c, _ in gate.controls)
    pos = [t - sum(1 for c in ctrl if c < t) for t in gate.targets]
    k = len(pos)
    if gate.kind == "X" and k == 1:
        a = [slice(None)] * sub.ndim
        b = list(a)
        a[pos[0]], b[pos[0]] = 0, 1
        tmp = sub[tuple(a)].copy()
        sub[tuple(a)] = sub[tuple(b)]
        sub[tuple(b)] = tmp
    elif gate.kind in ("Z", "Phase", "RotZ") and k == 1:
        d = np.diag(gate.unitary())
        for v in (0, 1):
            if d[v] != 1.0:
                a = [slice(None)] * sub.ndim
                a[pos[0]] = v
                sub[tuple(a)] *= d[v]
    else:
        m = gate.unitary()
        moved = np.moveaxis(sub, pos, list(range(k)))
        shape = moved.shape
        res = (m @ moved.reshape(2**k, -1)).reshape(shape)
        res = np.moveaxis(res, list(range(k)), pos)
        if gate.controls:
            psi[idx] = res
        else:
            psi[...] = res
        return
    if gate.controls:
        psi[idx] = sub


def _check(q: int, gate: Gate) -> None:
    if any(qb < 0 or qb >= q for qb in gate.qubits):
        raise IndexError(f"gate {gate.kind} touches a qubit outside 0..{q - 1}")


def apply(state: StateVector, gate: Gate) -> StateVector:
    _check(state.num_qubits, gate)
    psi = state.amplitudes.copy().reshape((2,) * state.num_qubits + (1,))
    _apply(psi, state.num_qubits, gate)
    return StateVector(psi.reshape(-1), state.num_qubits)


def run_batch(circuit: Circuit, columns: np.ndarray) -> np.ndarray:
    """Run ``circuit`` on every column of a ``(2**q, batch)`` array."""
    q = circuit.num_qubits
    cols = np.array(columns, dtype=complex, copy=True)
    if cols.ndim == 1:
        cols = cols[:, None]
    if cols.shape[0] != 2**q:
        raise ValueError("state length does not match the circuit")
    psi = cols.reshape((2,) * q + (cols.shape[1],))
    for g in circuit.gates:
        _check(q, g)
        _apply(psi, q, g)
    return psi.reshape(2**q, -1)


def run(circuit: Circuit, state) -> StateVector:
    if isinstance(state, StateVector):
        vec, q = state.amplitudes, state.num_qubits
    else:
        vec, q = np.asarray(state, dtype=complex), circuit.num_qubits
    if q != circuit.num_qubits:
        raise ValueError("state and circuit disagree on the qubit count")
    return StateVector(run_batch(circuit, vec)[:, 0], q)


def circuit_to_matrix(circuit: Circuit, cap: int = DEFAULT_CAP, chunk: int = 256) -> np.ndarray:
    q = circuit.num_qubits
    if q > cap:
        raise ValueError(f"{q} qubits exceeds the extraction cap of {cap}")
    N = 2**q
    out = np.empty((N, N), dtype=complex)
    for start in range(0, N, chunk):
        stop = min(N, start + chunk)
        cols = np.zeros((N, stop - start), dtype=complex)
        cols[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out[:, start:stop] = run_batch(circuit, cols)
    return out


def basis_index(q: int, assignment: Mapping[int, int]) -> int:
    """Basis index with the given qubits set (others 0)."""
    return sum(int(v) << (q - 1 - qb) for qb, v in assignment.items())


def register_indices(q: int, register: Sequence[int]) -> np.ndarray:
    """Basis indices that enumerate ``register`` (first qubit = MSB), all other qubits 0."""
    vals = np.arange(2 ** len(register))
    out = np.zeros_like(vals)
    for pos, qb in enumerate(register):
        bit = (vals >> (len(register) - 1 - pos)) & 1
        out |= bit << (q - 1 - qb)
    return out


def extract_block(circuit: Circuit, data: Sequence[int], ancillas: Sequence[int],
                  cap: int = DEFAULT_CAP) -> np.ndarray:
    """``(<0^a| (x) I) U (|0^a> (x) I)`` restricted to the ``data`` register.

    Only the ``2**len(data)`` input columns with every non-data qubit at 0 are
    simulated.  Every qubit not listed in ``data`` must be an ancilla.
    """
    q = circuit.num_qubits
    if q > cap:
        raise ValueError(f"{q} qubits exceeds the extraction cap of {cap}")
    data = list(data)
    if sorted(data + list(ancillas)) != list(range(q)):
        raise ValueError("data and ancilla registers must partition the qubits")
    rows = register_indices(q, data)
    cols = np.zeros((2**q, len(rows)), dtype=complex)
    cols[rows, np.arange(len(rows))] = 1.0
    out = run_batch(circuit, cols)
    return out[rows, :]


def success_probability(state: StateVector, pattern: Mapping[int, int]) -> float:
    """Exact probability that the qubits in ``pattern`` read the given values."""
    sub = state.project(pattern)
    return float(np.sum(np.abs(sub) ** 2))


def ancillas_clean(circuit: Circuit, inputs: Sequence[int], ancillas: Sequence[int]) -> bool:
    """Every basis input over ``inputs`` (ancillas at 0) leaves ``ancillas`` at 0."""
    q = circuit.num_qubits
    rows = register_indices(q, list(inputs))
    cols = np.zeros((2**q, len(rows)), dtype=complex)
    cols[rows, np.arange(len(rows))] = 1.0
    out = run_batch(circuit, cols)
    leaked = _project(out, q, {a: 0 for a in ancillas})
    return bool(np.allclose(np.sum(np.abs(leaked) ** 2, axis=0), 1.0, atol=1e-10))
