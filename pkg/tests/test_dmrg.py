import numpy as np
import pytest

from tnsim.dmrg import DmrgOptions, _bond_terms, _grow_left, _grow_right, optimize_site, run_dmrg
from tnsim.hamiltonian import dense_matrix, exact_diagonalize, model, zero_hamiltonian
from tnsim.mps import canonicalize, random_mps


def test_classical_ising():
    rep = run_dmrg(model("tfi", 6, J=1, g=0), DmrgOptions(D_max=2))
    assert abs(rep.energy + 5) <= 1e-10
    assert rep.energy_history[min(2, len(rep.energy_history) - 1)] + 5 <= 1e-10


def test_critical_tfi_matches_ed():
    H = model("tfi", 10, J=1, g=1)
    rep = run_dmrg(H, DmrgOptions(D_max=16))
    assert rep.converged
    assert abs(rep.energy - exact_diagonalize(H).ground_energy) <= 1e-8


def test_aklt_zero_energy():
    rep = run_dmrg(model("aklt", 12), DmrgOptions(D_max=4))
    assert abs(rep.energy) <= 1e-8


def test_report_invariants():
    H = model("tfi", 8, J=1, g=0.7)
    rep = run_dmrg(H, DmrgOptions(D_max=8, seed=3))
    assert all(b <= a + 1e-9 for a, b in zip(rep.energy_history, rep.energy_history[1:]))
    assert all(b <= a + 1e-9 for a, b in zip(rep.site_energies, rep.site_energies[1:]))
    assert rep.energy >= exact_diagonalize(H).ground_energy - 1e-9
    assert rep.sweeps_used == len(rep.energy_history)
    again = run_dmrg(H, DmrgOptions(D_max=8, seed=3))
    assert again.energy_history == rep.energy_history


def test_bond_dimension_ladder():
    H = model("tfi", 12, J=1, g=1)
    e = [run_dmrg(H, DmrgOptions(D_max=D, max_sweeps=10)).energy for D in (2, 4, 8)]
    assert e[1] <= e[0] + 1e-9 and e[2] <= e[1] + 1e-9


def test_periodic_rejected():
    with pytest.raises(ValueError):
        run_dmrg(model("tfi", 6, "periodic"), DmrgOptions())


def test_options_validation():
    with pytest.raises(ValueError):
        DmrgOptions(D_max=0)
    with pytest.raises(ValueError):
        DmrgOptions(energy_tol=2.0)


def test_optimize_site_zero_hamiltonian():
    H = zero_hamiltonian(4)
    rep = run_dmrg(H, DmrgOptions(D_max=2, max_sweeps=2))
    assert abs(rep.energy) <= 1e-14


def test_optimize_site_two_sites():
    H = model("tfi", 2, J=1, g=0.8)
    h = H.terms[0][1]
    tensor = np.ones((1, 2, 2), dtype=complex)
    left = np.zeros((2, 2), dtype=complex)
    # right environment of site 0 holds the whole bond term on (i_0, b) with b = i_1
    a, e = optimize_site(tensor, left, h)
    assert abs(e - np.linalg.eigvalsh(h)[0]) <= 1e-12
    assert np.isclose(np.linalg.norm(a), 1)


def test_optimize_site_matches_projected_problem():
    N, k = 6, 2
    H = model("tfi", N, J=1, g=0.9)
    st = canonicalize(random_mps(N, 3, 2, seed=4), k)
    t = list(st.tensors)
    terms = _bond_terms(H)
    left = np.zeros((2, 2), dtype=complex)
    for s in range(k):
        left = _grow_left(t[s], left, terms[s])
    right = np.zeros((2, 2), dtype=complex)
    for s in range(N - 1, k, -1):
        right = _grow_right(t[s], right, terms[s - 1])
    _, e = optimize_site(t[k], left, right)
    # isometry embedding the center tensor into the full space
    lmat = np.ones((1, 1), dtype=complex)
    for s in range(k):
        lmat = np.tensordot(lmat, t[s], axes=(1, 0)).reshape(-1, t[s].shape[2])
    rmat = np.ones((1, 1), dtype=complex)
    for s in range(N - 1, k, -1):
        rmat = np.tensordot(t[s], rmat, axes=(2, 0)).reshape(t[s].shape[0], -1)
    P = np.kron(np.kron(lmat, np.eye(2)), rmat.T)
    heff = P.conj().T @ dense_matrix(H) @ P
    assert abs(e - np.linalg.eigvalsh(heff)[0]) <= 1e-9


def test_optimize_site_errors():
    with pytest.raises(ValueError):
        optimize_site(np.ones((1, 2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(RuntimeError):
        optimize_site(np.ones((1, 2, 1)), bad, np.zeros((2, 2)))
