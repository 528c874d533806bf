import numpy as np
import pytest

from conftest import random_hermitian
from tnsim.hamiltonian import (
    NnHamiltonian,
    aklt_term,
    dense_matrix,
    embed,
    energy,
    exact_diagonalize,
    model,
    model_from_json,
    model_to_json,
    spin_matrices,
)
from tnsim.mps import named_state, product_state, random_mps, to_dense


def test_aklt_term_is_spin2_projector():
    h = aklt_term()
    w = np.linalg.eigvalsh(h)
    assert np.allclose(w[:4], 0, atol=1e-12) and np.allclose(w[4:], 1, atol=1e-12)
    assert np.allclose(h @ h, h, atol=1e-10)


def test_spin1_convention():
    s = spin_matrices(1)
    assert np.allclose(s["Sz"], np.diag([1, 0, -1]))
    assert np.allclose(s["Sx"] @ s["Sy"] - s["Sy"] @ s["Sx"], 1j * s["Sz"])


def test_tfi_classical_limits():
    assert np.isclose(exact_diagonalize(model("tfi", 4, J=1, g=0)).ground_energy, -3)
    ed = exact_diagonalize(model("tfi", 3, J=1, g=0))
    assert np.isclose(ed.ground_energy, -2)
    assert np.isclose(max(abs(ed.ground_vector[0]), abs(ed.ground_vector[-1])) ** 2
                      + min(abs(ed.ground_vector[0]), abs(ed.ground_vector[-1])) ** 2, 1)
    assert np.isclose(energy(product_state([0] * 5), model("tfi", 5, J=1, g=0)), -4)


def test_tfi_sum_of_terms_is_exact_model():
    N, J, g = 5, 0.7, 1.3
    Z, X = np.diag([1.0, -1.0]), np.array([[0, 1.0], [1.0, 0]])
    ref = sum(-J * embed(np.kron(Z, Z), [i, i + 1], N, 2) for i in range(N - 1))
    ref = ref + sum(-g * embed(X, [i], N, 2) for i in range(N))
    assert np.allclose(dense_matrix(model("tfi", N, J=J, g=g)), ref.toarray())
    ring = ref + -J * embed(np.kron(Z, Z), [N - 1, 0], N, 2)
    assert np.allclose(dense_matrix(model("tfi", N, "periodic", J=J, g=g)), ring.toarray())


def test_tfi_ed_sparse_path():
    H = model("tfi", 10, J=1, g=1)
    m = dense_matrix(H)
    assert np.allclose(m, m.conj().T, atol=1e-12)
    ed = exact_diagonalize(H)
    assert abs(ed.ground_energy - np.linalg.eigvalsh(m)[0]) <= 1e-9
    assert abs(np.linalg.norm(ed.ground_vector) - 1) <= 1e-12
    k = np.argmax(np.abs(ed.ground_vector))
    assert abs(ed.ground_vector[k].imag) <= 1e-12 and ed.ground_vector[k].real > 0


def test_aklt_energy_and_degeneracy():
    assert abs(energy(named_state("aklt", 8), model("aklt", 8))) <= 1e-10
    ed = exact_diagonalize(model("aklt", 6))
    assert abs(ed.ground_energy) <= 1e-10
    assert ed.degeneracy() == 4


def test_heisenberg_gap():
    w = exact_diagonalize(model("heisenberg_spin1", 6, "periodic")).spectrum_head
    assert w[1] - w[0] > 0.1


def test_energy_matches_dense(rng):
    for boundary in ("open", "periodic"):
        N = 6
        terms = [(i, random_hermitian(4, rng)) for i in range(N if boundary == "periodic" else N - 1)]
        H = model("custom", N, boundary, terms=terms)
        r = random_mps(N, 3, 2, seed=7, boundary=boundary)
        v = to_dense(r)
        ref = (v.conj() @ dense_matrix(H) @ v).real / np.vdot(v, v).real
        e = energy(r, H)
        assert abs(e - ref) <= 1e-10 * abs(ref)
        assert e >= exact_diagonalize(H).ground_energy - 1e-9


def test_errors():
    with pytest.raises(ValueError):
        model("tfi", 1)
    with pytest.raises(ValueError):
        model("ising", 4)
    with pytest.raises(ValueError):
        exact_diagonalize(model("aklt", 12))


def test_non_hermitian_custom_rejected():
    h = np.zeros((4, 4))
    h[0, 1] = 1
    with pytest.raises(ValueError):
        NnHamiltonian(3, 2, ((0, h),), "open")


def test_json_roundtrip(rng):
    H = model_from_json({"kind": "tfi", "N": 6, "J": 1.0, "g": 0.5, "boundary": "open"})
    assert np.allclose(dense_matrix(H), dense_matrix(model("tfi", 6, J=1, g=0.5)))
    terms = [(i, random_hermitian(4, rng)) for i in range(3)]
    C = model("custom", 4, terms=terms)
    back = model_from_json(model_to_json(C))
    assert np.allclose(dense_matrix(back), dense_matrix(C))
