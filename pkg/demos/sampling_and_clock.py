"""Monte Carlo estimates from exact MPS samples, and a circuit clock Hamiltonian.

Run with ``python demos/sampling_and_clock.py``.
"""

import numpy as np

from tnsim.clock import Circuit, Gate, compile, history_state
from tnsim.dmrg import DmrgOptions, run_dmrg
from tnsim.hamiltonian import PAULI, model
from tnsim.sampling import estimate_local
from tnsim.transfer import expectation

X = PAULI["X"]
st = run_dmrg(model("tfi", 10, J=1.0, g=0.5), DmrgOptions(D_max=16, seed=0)).state
ref = expectation(st, [(4, X)]).real
print(f"<X_4> from the transfer operator: {ref:.6f}")
for n in (1000, 4000, 16000):
    rep = estimate_local(st, X, 4, n, seed=1)
    print(f"  n = {n:5d}: {rep.estimate:.6f} +- {rep.std_error:.6f}")

# A verifier that copies its proof qubit onto an ancilla and accepts on it.
cnot = np.eye(4)[[0, 1, 3, 2]]
circ = Circuit(n_qubits=2, n_proof=1, gates=(Gate((0, 1), cnot),), accept_qubit=1)
inst = compile(circ)
w, v = np.linalg.eigh(inst.hamiltonian)
hist = history_state(circ, [0, 1])
print(f"\naccepting verifier: ground energy {w[0]:.2e}, history-state overlap {abs(v[:, 0].conj() @ hist) ** 2:.6f}")
never = Circuit(n_qubits=1, n_proof=0, gates=(Gate((0,), np.eye(2)),), accept_qubit=0)
print(f"rejecting verifier: ground energy {compile(never).ground_energy():.6f}")
