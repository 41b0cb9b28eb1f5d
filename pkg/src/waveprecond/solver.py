"""Solution-state pipeline: select, invert, amplify, recombine.

Qubit layout of the pipeline circuit::

    0            flag (good subspace = flag 0 and every QMI ancilla 0)
    1            sel_a (recombination select, untouched until the last stage)
    2            sel_b
    3 .. 3+D-1   data (D = d*n)
    ...          remaining QMI ancillas, select workspace
    last         reflection ancilla (phase kickback)
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from waveprecond import blockenc, dwt, fdm, precond, qsim
from waveprecond.fdm import DiscretizedSystem, OperatorKind
from waveprecond.observable import SparseObservable, expectation, extend
from waveprecond.qmi import QmiConfig, build_qmi
from waveprecond.qsim import Circuit, StateVector

AMPLIFY_LAMBDA = 6.0 / 5.0
PIPELINE_CAP = 20
NEGATIVE_KINDS = (OperatorKind.L1, OperatorKind.LAPLACE2D)


def prepare_b_state(b: np.ndarray) -> StateVector:
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        raise ValueError("cannot prepare the zero vector")
    q = int(round(np.log2(len(b))))
    if 2**q != len(b):
        raise ValueError("length of b must be a power of two")
    return StateVector(b / nb, q)


def state_preparation_unitary(b: np.ndarray) -> np.ndarray:
    """Real Householder reflection sending ``e_0`` to ``b/||b||``."""
    v = prepare_b_state(b).amplitudes.real
    e0 = np.zeros_like(v)
    e0[0] = 1.0
    w = e0 - v
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return np.eye(len(v))
    w /= nw
    return np.eye(len(v)) - 2.0 * np.outer(w, w)


@dataclass
class PipelineProblem:
    """A preconditioned system scaled so that ``||A_p|| = 1`` and ``alpha = kappa_p``."""

    A_p: np.ndarray
    W: np.ndarray
    P: np.ndarray
    b: np.ndarray
    kappa_p: float
    scale: float
    sign: float
    n: int
    d: int
    system: DiscretizedSystem

    @property
    def D(self) -> int:
        return self.n * self.d

    def u_plus_minus(self, a: int) -> np.ndarray:
        root = np.sqrt(np.clip(1.0 - self.P**2, 0.0, None))
        return self.P + (1j if a == 0 else -1j) * root

    def branches(self) -> dict:
        """``psi_ab = W^T U^a A_p^{-1} U^b W |b>`` computed with dense algebra."""
        Ainv = np.linalg.inv(self.A_p)
        wb = self.W @ self.b
        return {(a, c): self.W.T @ (self.u_plus_minus(a) * (Ainv @ (self.u_plus_minus(c) * wb)))
                for a in (0, 1) for c in (0, 1)}

    def solution(self) -> np.ndarray:
        """``A^{-1} b/||b||`` of the original (unscaled) system."""
        u_scaled = self.W.T @ (self.P * np.linalg.solve(self.A_p, self.P * (self.W @ self.b)))
        return self.sign * u_scaled / self.scale


def pipeline_problem(sys: DiscretizedSystem, W: dwt.TransformMatrix, P: precond.Preconditioner) -> PipelineProblem:
    """Prepare a system for the quantum pipeline.

    ``L1`` and ``Laplace2D`` are negated to a positive semidefinite matrix;
    singular systems need a mean-free right-hand side and are deflated.
    The preconditioned matrix is scaled to unit norm, so ``alpha = kappa_p``.
    """
    if not W.orthogonal:
        raise ValueError("the quantum pipeline needs an orthogonal wavelet")
    sign = 1.0
    if sys.kind in NEGATIVE_KINDS:
        sys = fdm.negate(sys)
        sign = -1.0
    if sys.kernel_dim:
        if abs(sys.b.sum()) > 1e-12 * np.linalg.norm(sys.b) * np.sqrt(sys.N):
            raise ValueError("singular system needs a mean-free right-hand side (use constant_free)")
    pre = precond.precondition(sys, W, P, kernel_policy="deflate_constant")
    A = pre.A_solve / pre.sigma_max
    b = np.asarray(sys.b, dtype=float)
    # sign already folded into sys; solution() multiplies it back for the report
    return PipelineProblem(A_p=A, W=pre.W_full, P=P.diag, b=b / np.linalg.norm(b), kappa_p=pre.kappa_p,
                           scale=pre.sigma_max, sign=sign, n=sys.n, d=sys.d, system=sys)


@dataclass
class Pipeline:
    """``U_Psi`` plus the pieces needed for amplification and recombination."""

    problem: PipelineProblem
    circuit: Circuit
    completion: Circuit
    reflection: Circuit
    good_reflection: Circuit
    qmi: blockenc.BlockEncoding
    roles: dict
    alpha: float

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    @property
    def good_pattern(self) -> dict:
        return {q: 0 for q in (self.roles["flag"] + self.roles["qmi_ancillas"])}


def build_solution_pipeline(problem: PipelineProblem, qmi_cfg: Optional[QmiConfig] = None,
                            cap: int = PIPELINE_CAP) -> Pipeline:
    qmi_cfg = qmi_cfg or QmiConfig()
    n, d, D = problem.n, problem.d, problem.D
    qmi_be = build_qmi(problem.A_p, qmi_cfg)
    sel = blockenc.select_u_pm_dD(n, d)
    flag, sel_a, sel_b = 0, 1, 2
    data = list(range(3, 3 + D))
    nxt = 3 + D
    qmi_extra = list(range(nxt, nxt + qmi_be.a - 1 + len(qmi_be.workspace)))
    nxt += len(qmi_extra)
    sel_ws = list(range(nxt, nxt + len(sel.clean)))
    nxt += len(sel_ws)
    refl = nxt
    q = nxt + 1
    if q > cap:
        raise ValueError(f"pipeline needs {q} qubits, above the cap of {cap}")

    # QMI placed with its flag on sel_b's wire, between the two swaps
    qmi_map = [0] * qmi_be.circuit.num_qubits
    qmi_map[qmi_be.ancillas[0]] = sel_b
    rest = list(qmi_be.ancillas[1:]) + list(qmi_be.workspace)
    for i, qb in enumerate(rest):
        qmi_map[qb] = qmi_extra[i]
    for i, qb in enumerate(qmi_be.data):
        qmi_map[qb] = data[i]

    def sel_map(control):
        m = [0] * sel.num_qubits
        m[0] = control
        for i, qb in enumerate(sel.roles["data"]):
            m[qb] = data[i]
        for i, qb in enumerate(sel.clean):
            m[qb] = sel_ws[i]
        return m

    roles = {"flag": (flag,), "sel_a": (sel_a,), "sel_b": (sel_b,), "data": tuple(data),
             "qmi_ancillas": tuple(qmi_extra), "workspace": tuple(sel_ws), "reflection": (refl,)}
    u_psi = Circuit(q, roles=roles, clean=tuple(sel_ws))
    u_psi.append(qsim.h(sel_b))
    u_psi.append(qsim.unitary_block(data, state_preparation_unitary(problem.b), label="P_b"))
    u_psi.append(qsim.unitary_block(data, problem.W, label="W"))
    u_psi.compose(sel, sel_map(sel_b))
    u_psi.append(qsim.swap(flag, sel_b))
    u_psi.compose(qmi_be.circuit, qmi_map)
    u_psi.append(qsim.swap(flag, sel_b))

    completion = Circuit(q, roles=roles)
    completion.append(qsim.h(sel_a))
    completion.compose(sel, sel_map(sel_a))
    completion.append(qsim.unitary_block(data, problem.W.T, label="W^T"))

    # R = 2|0><0| - 1 on the U_Psi register via phase kickback
    reg = [flag, sel_b] + data + qmi_extra + sel_ws
    refl_c = Circuit(q, roles=roles)
    refl_c.extend([qsim.x(refl), qsim.z(refl), qsim.h(refl),
                   qsim.Gate("X", (refl,), tuple((r, 0) for r in reg)),
                   qsim.h(refl), qsim.x(refl)])

    # R_good = 2 Pi_good - 1
    good_c = Circuit(q, roles=roles)
    if qmi_extra:
        good_c.extend([qsim.x(flag), qsim.z(flag, [(a, 0) for a in qmi_extra]), qsim.x(flag),
                       qsim.x(refl), qsim.z(refl), qsim.x(refl)])
    else:
        good_c.append(qsim.z(flag))
    return Pipeline(problem, u_psi, completion, refl_c, good_c, qmi_be, roles, qmi_be.alpha)


def initial_state(pipe: Pipeline) -> StateVector:
    return qsim.run(pipe.circuit, StateVector.zero(pipe.num_qubits))


def grover_step(pipe: Pipeline, state: StateVector) -> StateVector:
    """``(U_Psi R U_Psi^dag) R_good`` applied once."""
    s = qsim.run(pipe.good_reflection, state)
    s = qsim.run(pipe.circuit.inverse(), s)
    s = qsim.run(pipe.reflection, s)
    return qsim.run(pipe.circuit, s)


def ideal_rounds(p: float) -> int:
    return int(np.floor(np.pi / (4.0 * np.arcsin(np.sqrt(min(max(p, 0.0), 1.0))))))


@dataclass
class PipelineResult:
    psi: StateVector
    xi: float
    p_succ: float
    rounds: int
    mode: str
    seed: Optional[int]
    p_amplified: float
    alpha: float
    full_state: StateVector = field(repr=False)
    pre_amplification: StateVector = field(repr=False)
    attempts: int = 1


def _post_select(pipe: Pipeline, state: StateVector) -> StateVector:
    """Normalized state on ``(sel_a, sel_b, data)`` with the good pattern fixed."""
    pattern = dict(pipe.good_pattern)
    pattern.update({q: 0 for q in pipe.roles["workspace"] + pipe.roles["reflection"]})
    sub = state.project(pattern)
    nrm = np.linalg.norm(sub)
    if nrm == 0.0:
        raise ValueError("good subspace has zero amplitude")
    return StateVector(sub / nrm, pipe.num_qubits - len(pattern))


def amplify(pipe: Pipeline, mode: str = "ideal", seed: Optional[int] = None,
            p_floor: float = 1e-6, max_attempts: int = 10_000) -> PipelineResult:
    """Amplitude amplification of the flag-0 component, then recombination.

    ``ideal`` applies ``floor(pi / (4 arcsin sqrt(p)))`` rounds with ``p`` read
    exactly.  ``faithful`` runs the exponential schedule with growth factor
    6/5: draw ``j`` uniformly below ``m``, apply ``j`` rounds, sample a flag
    measurement, and stop at the first success.
    """
    psi0 = initial_state(pipe)
    p = psi0.probability(pipe.good_pattern)
    if p < p_floor:
        raise ValueError(f"success probability {p:.3g} below floor {p_floor:g}")
    cache = [psi0]

    def power(j):
        while len(cache) <= j:
            cache.append(grover_step(pipe, cache[-1]))
        return cache[j]

    attempts = 1
    if mode == "ideal":
        rounds = ideal_rounds(p)
        state = power(rounds)
    elif mode == "faithful":
        if seed is None:
            raise ValueError("faithful mode needs a seed")
        rng = np.random.default_rng(seed)
        m, rounds = 1.0, 0
        limit = np.sqrt(2.0 ** (pipe.problem.D + 2))
        for attempts in range(1, max_attempts + 1):
            j = int(rng.integers(0, int(np.ceil(m))))
            rounds += j
            state = power(j)
            if rng.random() < state.probability(pipe.good_pattern):
                break
            m = min(AMPLIFY_LAMBDA * m, limit)
        else:
            raise RuntimeError("amplification did not succeed within the attempt budget")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    p_amp = state.probability(pipe.good_pattern)
    final = qsim.run(pipe.completion, state)
    return PipelineResult(psi=_post_select(pipe, final), xi=recover_norm(p, pipe.alpha), p_succ=p,
                          rounds=rounds, mode=mode, seed=seed, p_amplified=p_amp, alpha=pipe.alpha,
                          full_state=final, pre_amplification=psi0, attempts=attempts)


def recover_norm(p_succ: float, kappa_p: float) -> float:
    """``xi = kappa_p sqrt(p_succ)`` (``kappa_p`` here is the QMI scale ``alpha``)."""
    if not 0.0 < p_succ <= 1.0 + 1e-12:
        raise ValueError("p_succ must lie in (0, 1]")
    return float(kappa_p * np.sqrt(min(p_succ, 1.0)))


def estimate_norm(p_succ: float, kappa_p: float, repetitions: int, seed: int) -> tuple[float, float]:
    """Sampled ``xi`` from ``repetitions`` flag measurements and its standard error."""
    rng = np.random.default_rng(seed)
    hits = rng.binomial(repetitions, p_succ)
    p_hat = hits / repetitions
    if p_hat == 0.0:
        return 0.0, float("inf")
    se_p = np.sqrt(p_hat * (1.0 - p_hat) / repetitions)
    xi = kappa_p * np.sqrt(p_hat)
    return float(xi), float(kappa_p * se_p / (2.0 * np.sqrt(p_hat)))


def branch_norm(problem: PipelineProblem) -> float:
    """``xi`` from ``xi**2 = (1/4) sum ||psi_ab||**2``."""
    return float(np.sqrt(sum(np.linalg.norm(v) ** 2 for v in problem.branches().values()) / 4.0))


def expected_state(problem: PipelineProblem) -> np.ndarray:
    """``(1/2 xi) sum_ab |ab> psi_ab`` as a dense vector."""
    br = problem.branches()
    xi = branch_norm(problem)
    return np.concatenate([br[(a, c)] for a in (0, 1) for c in (0, 1)]) / (2.0 * xi)


def direct_approach_probability(b: np.ndarray, W: np.ndarray, cap: int = 16) -> float:
    """Flag-0 probability of ``U_P`` on ``|b_w> = W|b>/||b||``, i.e. ``||P b_w||**2``."""
    W = np.asarray(W)
    n = int(round(np.log2(W.shape[0])))
    bw = W @ prepare_b_state(b).amplitudes.real
    up = blockenc.u_p_block_encoding(n)
    q = up.circuit.num_qubits
    if q > cap:
        raise ValueError(f"{q} qubits exceeds the cap of {cap}")
    vec = np.zeros(2**q, dtype=complex)
    vec[qsim.register_indices(q, list(up.data))] = bw
    out = qsim.run(up.circuit, StateVector(vec, q))
    return out.probability({0: 0, **{w: 0 for w in up.workspace}})


@dataclass
class ExpectationReport:
    operator: str
    wavelet: str
    n: int
    d: int
    route: str
    t: Optional[int]
    xi: float
    p_succ: float
    rounds: int
    quantum_value: float
    classical_value: float
    abs_error: float
    seed: Optional[int]
    budget: float = 0.0
    note: str = "u = A^{-1} b / ||b|| (relative to the normalized right-hand side)"

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in ("operator", "wavelet", "n", "d", "route", "t", "xi", "p_succ",
                                              "rounds", "quantum_value", "classical_value", "abs_error", "budget",
                                              "seed")}


def classical_value(problem: PipelineProblem, M: np.ndarray) -> float:
    """``b^T A^-T M A^-1 b / ||b||^2`` from a dense solve of the original system."""
    sys = problem.system
    b = sys.b / np.linalg.norm(sys.b)
    if sys.kernel_dim:
        # particular solution picked by the deflated preconditioned system
        u = problem.solution()
    else:
        u = problem.sign * np.linalg.solve(sys.A, b)
    return float(u @ M @ u)


def error_budget(problem: PipelineProblem, inverse_eps: float, M: np.ndarray, roundoff: float = 1e-9) -> float:
    """Bound on ``|<u|M|u>`` error| given ``||alpha Ext - A_p^{-1}|| <= inverse_eps``.

    ``|P| <= 1`` and ``W`` is orthogonal, so the scaled solution moves by at
    most ``inverse_eps``; the bound is then ``||M|| (2 ||u|| e + e^2)`` in the
    original units, plus a floating-point allowance.
    """
    u = problem.W.T @ (problem.P * np.linalg.solve(problem.A_p, problem.P * (problem.W @ problem.b)))
    e = float(inverse_eps)
    Mn = float(np.linalg.norm(M, 2))
    return Mn * (2.0 * np.linalg.norm(u) * e + e * e) / problem.scale**2 + roundoff * max(1.0, Mn * (np.linalg.norm(u) / problem.scale) ** 2)


def end_to_end_expectation(sys: DiscretizedSystem, W: dwt.TransformMatrix, P: precond.Preconditioner,
                           qmi_cfg: Optional[QmiConfig], M: SparseObservable, mode: str = "ideal",
                           seed: Optional[int] = None, cap: int = PIPELINE_CAP) -> ExpectationReport:
    qmi_cfg = qmi_cfg or QmiConfig()
    problem = pipeline_problem(sys, W, P)
    pipe = build_solution_pipeline(problem, qmi_cfg, cap)
    res = amplify(pipe, mode, seed)
    Mp = extend(M)
    # <psi|M'|psi> = (4/xi^2) <u|M|u> for the scaled system
    q_scaled = res.xi**2 / 4.0 * expectation(res.psi, Mp)
    quantum = q_scaled / problem.scale**2
    Md = M.dense()
    classical = classical_value(problem, Md)
    return ExpectationReport(
        operator=sys.kind.value, wavelet=W.spec.name, n=sys.n, d=sys.d, route=qmi_cfg.route,
        t=pipe.qmi.meta.get("t"), xi=res.xi, p_succ=res.p_succ, rounds=res.rounds,
        quantum_value=float(quantum), classical_value=classical, abs_error=float(abs(quantum - classical)),
        seed=seed, budget=error_budget(problem, pipe.qmi.eps, Md),
    )


def identity_problem(n: int, b: Optional[np.ndarray] = None) -> PipelineProblem:
    """``A = I`` with the identity transform (smoke tests)."""
    N = 2**n
    b = np.ones(N) if b is None else np.asarray(b, dtype=float)
    sys = DiscretizedSystem(A=np.eye(N), b=b, n=n, d=1, kind=OperatorKind.L3)
    P = precond.build_preconditioner(n).diag
    A_p = np.diag(P**2)
    return PipelineProblem(A_p=A_p, W=np.eye(N), P=P, b=b / np.linalg.norm(b), kappa_p=float(1 / P.min() ** 2),
                           scale=1.0, sign=1.0, n=n, d=1, system=replace(sys))
