"""The diagonal preconditioner as a sum of two unitaries, and the MAX circuit for d dimensions.

P = (U+ + U-)/2 where U+- are diagonal phase circuits.  Adding one ancilla with
Hadamards around a selected U+/U- gives a block encoding of P.
Run with: python3 demos/02_block_encodings.py
"""
import numpy as np

from waveprecond import blockenc, precond

n = 4
plus = blockenc.diagonal_of(blockenc.u_pm_circuit(n, "+"), range(n))
minus = blockenc.diagonal_of(blockenc.u_pm_circuit(n, "-"), range(n))
P = precond.build_preconditioner(n).diag
print("P diagonal:        ", np.round(P, 4))
print("(U+ + U-)/2 real:  ", np.round(((plus + minus) / 2).real, 4))
print("max deviation:      %.1e" % np.abs((plus + minus) / 2 - P).max())

up = blockenc.u_p_block_encoding(n)
block = up.extract()
print("\nblock of U_P equals diag(P):", np.allclose(block, np.diag(P), atol=1e-12))
print("qubits used:", up.circuit.num_qubits, " census:", dict(up.circuit.census()))

print("\nToffoli counts of the controlled U+ (prefix-AND ladder):")
for k in range(2, 9):
    print(f"  n = {k}: {blockenc.toffoli_count(blockenc.controlled_u_pm(k, '+'))}")

print("\nMAX circuit Toffoli counts, count / (d n):")
for d in (2, 3):
    for k in (2, 3, 4):
        t = blockenc.toffoli_count(blockenc.max_circuit(k, d))
        print(f"  d = {d}, n = {k}: {t:4d}  ratio {t / (d * k):.2f}")
