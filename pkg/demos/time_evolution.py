"""Real-time quench and finite-temperature states with Trotter circuits.

Run with ``python demos/time_evolution.py``.
"""

import numpy as np
import scipy.linalg

from tnsim.hamiltonian import PAULI, dense_matrix, embed, model
from tnsim.mps import product_state, to_dense
from tnsim.tebd import evolve, thermal_mpdo
from tnsim.transfer import expectation

X, Z = PAULI["X"], PAULI["Z"]
N = 6
H = model("tfi", N, J=1.0, g=1.0)
start = product_state([0] * N)

# First-order Trotter: halving the step halves the error.
psi = scipy.linalg.expm(-1j * dense_matrix(H)) @ to_dense(start)
exact = (psi.conj() @ (embed(X, [2], N, 2) @ psi)).real
print(f"exact <X_2>(t=1) = {exact:.8f}")
prev = None
for M in (16, 32, 64, 128):
    out, trunc = evolve(start, H, 1.0, M)
    err = abs(expectation(out, [(2, X)]).real - exact)
    ratio = "" if prev is None else f" ratio {prev / err:.3f}"
    print(f"  M = {M:3d}: error {err:.3e}{ratio}")
    prev = err

# Thermal state exp(-beta H) as a matrix product density operator.
beta = 1.0
rho = thermal_mpdo(H, beta, 200, D_max=32)
dense = scipy.linalg.expm(-beta * dense_matrix(H))
zz = embed(np.kron(Z, Z), [2, 3], N, 2).toarray()
ref = np.trace(dense @ zz).real / np.trace(dense).real
print(f"\nbeta = {beta}: <Z_2 Z_3> MPDO = {rho.expectation([(2, Z), (3, Z)]).real:.6f}, exact = {ref:.6f}")
