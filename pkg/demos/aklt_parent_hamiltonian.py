"""The AKLT chain: an exact MPS ground state and its parent Hamiltonian.

Run with ``python demos/aklt_parent_hamiltonian.py``.
"""

import math

import numpy as np

from tnsim.hamiltonian import aklt_term, energy, exact_diagonalize, model, spin_matrices
from tnsim.mps import aklt_tensor, named_state
from tnsim.parent import injectivity_check, parent_hamiltonian
from tnsim.transfer import correlation_length, correlator, transfer_op

# The bond-dimension-2 AKLT state is annihilated by every local term.
psi = named_state("aklt", 20)
print(f"<H_AKLT> on 20 sites: {energy(psi, model('aklt', 20)):.2e}")

# Its transfer operator has spectrum {1, -1/3, -1/3, -1/3}, so correlations
# decay as (-1/3)^r with correlation length 1/ln 3.
spectrum = np.linalg.eigvals(transfer_op(aklt_tensor()).matrix)
print("transfer spectrum:", np.round(np.sort(spectrum.real), 6))
print(f"correlation length: {correlation_length(aklt_tensor()):.9f} (1/ln3 = {1 / math.log(3):.9f})")

sz = spin_matrices(1)["Sz"]
long = named_state("aklt", 40)
for r in range(1, 7):
    c = correlator(long, sz, sz, 15, 15 + r, connected=True).real
    print(f"  <Sz_i Sz_i+{r}>_c = {c:+.6e}   ratio to (-1/3)^r: {c / (-1 / 3) ** r:.6f}")

# Reconstruct a Hamiltonian from the state alone: project out the support of
# the two-site reduced density matrix.
ok, k = injectivity_check(aklt_tensor(), 4)
print(f"injective after blocking k = {k}" if ok else "not injective")
ph = parent_hamiltonian(named_state("aklt", 8, "periodic"), 2)
dev = max(np.max(np.abs(h - aklt_term())) for _, h in ph.terms)
print(f"parent term vs spin-2 projector: max deviation {dev:.1e}")
ed = exact_diagonalize(ph.dense_matrix(), k=3)
print("parent Hamiltonian spectrum on the 8-site ring:", np.round(ed.spectrum_head, 6))
