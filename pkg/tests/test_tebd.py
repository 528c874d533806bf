import numpy as np
import pytest
import scipy.linalg

from tnsim.hamiltonian import PAULI, dense_matrix, embed, energy, exact_diagonalize, model, zero_hamiltonian
from tnsim.mps import norm, normalize, product_state, random_mps, to_dense
from tnsim.tebd import evolve, identity_mpdo, thermal_mpdo, trotter_plan
from tnsim.transfer import expectation

X, Z = PAULI["X"], PAULI["Z"]


def test_zero_hamiltonian_is_identity():
    r = random_mps(6, 3, 2, seed=1)
    out, trunc = evolve(r, zero_hamiltonian(6), 2.0, 10)
    v, w = to_dense(r), to_dense(out)
    # only exact zeros beyond the true rank are dropped, at rounding level
    assert trunc <= 1e-24
    assert np.allclose(w, v, atol=1e-12)


def test_plan_layers():
    plan = trotter_plan(model("tfi", 7), 1.0, 10)
    even, odd = plan.layers
    assert [b for b, _ in even] == [0, 2, 4] and [b for b, _ in odd] == [1, 3, 5]
    for _, g in even + odd:
        assert np.max(np.abs(g.conj().T @ g - np.eye(4))) <= 1e-10


def test_field_precession():
    g, t = 0.7, 1.3
    H = model("tfi", 4, J=0.0, g=g)
    out, _ = evolve(product_state([0] * 4), H, t, 8)
    for s in range(4):
        assert abs(expectation(out, [(s, Z)]).real - np.cos(2 * g * t)) <= 1e-12


def dense_x(t, H, psi0, site):
    psi = scipy.linalg.expm(-1j * t * dense_matrix(H)) @ psi0
    return (psi.conj() @ (embed(X, [site], H.N, 2) @ psi)).real


def test_first_order_trotter_scaling():
    N = 6
    H = model("tfi", N, J=1, g=1)
    st = product_state([0] * N)
    ref = dense_x(1.0, H, to_dense(st), 2)
    errs = []
    for M in (16, 32, 64, 128):
        out, trunc = evolve(st, H, 1.0, M)
        assert abs(norm(out) - 1) <= trunc + 1e-8
        errs.append(abs(expectation(out, [(2, X)]).real - ref))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(1.5 <= q <= 2.5 for q in ratios), ratios


def test_truncated_norm_bound():
    H = model("tfi", 8, J=1, g=1.2)
    out, trunc = evolve(normalize(random_mps(8, 2, 2, seed=3)), H, 1.0, 20, D_max=4)
    assert max(out.bond_dims) <= 4
    assert abs(norm(out) - 1) <= trunc + 1e-8


def test_imaginary_time_energy_monotone():
    H = model("tfi", 6, J=1, g=0.8)
    energies = []
    evolve(random_mps(6, 4, 2, seed=2), H, 2.0, 40, mode="imaginary",
           callback=lambda step, st, c: energies.append(energy(st, H)))
    assert all(b <= a + 1e-8 for a, b in zip(energies, energies[1:]))


def test_imaginary_time_reaches_ground_state():
    H = model("tfi", 8, J=1, g=1)
    out, _ = evolve(random_mps(8, 8, 2, seed=0), H, 30.0, 3000, D_max=8, mode="imaginary")
    assert abs(energy(out, H) - exact_diagonalize(H).ground_energy) <= 1e-4


def test_errors():
    r = random_mps(4, 2, 2, seed=0)
    H = model("tfi", 4)
    with pytest.raises(ValueError):
        evolve(r, H, 1.0, 10, D_max=0)
    with pytest.raises(ValueError):
        evolve(r, H, float("nan"), 10)
    with pytest.raises(ValueError):
        thermal_mpdo(H, -1.0, 10)


def test_beta_zero_identity():
    rho = thermal_mpdo(model("tfi", 5), 0.0, 10)
    assert rho.bond_dims == [1, 1, 1, 1]
    assert np.array_equal(rho.to_dense(), np.eye(32))
    assert rho.trace() == 32


def dense_thermal(H, beta, ops):
    rho = scipy.linalg.expm(-beta * dense_matrix(H))
    o = np.eye(H.dim, dtype=complex)
    for s, op in ops:
        o = o @ embed(op, [s], H.N, 2).toarray()
    return np.trace(rho @ o).real / np.trace(rho).real, rho


def test_thermal_observables():
    H = model("tfi", 6, J=1, g=1)
    rho = thermal_mpdo(H, 1.0, 200, D_max=32)
    for ops in ([(2, Z)], [(2, Z), (3, Z)], [(1, X)]):
        ref, _ = dense_thermal(H, 1.0, ops)
        val = rho.expectation(ops)
        assert abs(val.imag) <= 1e-10
        assert abs(val.real - ref) <= 1e-3
    assert abs(rho.trace().imag) <= 1e-10 * abs(rho.trace())


def test_thermal_mpdo_hermitian():
    H = model("tfi", 4, J=1, g=0.6)
    m = thermal_mpdo(H, 0.8, 20).to_dense()
    assert np.allclose(m, m.conj().T, atol=1e-12 * np.abs(m).max())
    _, ref = dense_thermal(H, 0.8, [])
    assert np.linalg.norm(m - ref) / np.linalg.norm(ref) <= 0.05


def test_low_temperature_limit():
    H = model("tfi", 6, J=1, g=0.2)
    rho = thermal_mpdo(H, 20.0, 200, D_max=32)
    ed = exact_diagonalize(H)
    ref = (ed.ground_vector.conj() @ (embed(np.kron(Z, Z), [2, 3], 6, 2) @ ed.ground_vector)).real
    assert abs(rho.expectation([(2, Z), (3, Z)]).real - ref) <= 1e-3


def test_identity_mpdo_two_site_contraction(rng):
    rho = identity_mpdo(3, 2)
    h = rng.standard_normal((4, 4))
    assert np.isclose(rho._contract([(0, h)]), np.trace(h) * 2)
