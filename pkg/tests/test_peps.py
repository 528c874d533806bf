import itertools

import numpy as np
import pytest

import tnsim.peps as peps_mod
from tnsim.peps import (
    BoundaryPlan,
    PepsState,
    boundary_contract,
    default_plan,
    exact_contract,
    expectation_report,
    ising_peps,
    load_pepsz,
    local_expectation,
    product_peps,
    random_peps,
    save_pepsz,
    two_site_expectation,
)

Z = np.diag([1.0, -1.0])


def ising_tm_correlator(beta, R, C, sites):
    """Classical open-lattice Gibbs average of prod z over ``sites`` by row transfer matrices."""
    spins = np.array(list(itertools.product([1, -1], repeat=R)))  # row r of a column = spins[:, r]
    vertical = np.exp(beta * np.sum(spins[:, :-1] * spins[:, 1:], axis=1))
    horizontal = np.exp(beta * spins @ spins.T)

    def column_weight(c, with_ops):
        w = vertical.copy()
        if with_ops:
            for r, cc in sites:
                if cc == c:
                    w = w * spins[:, r]
        return w

    def total(with_ops):
        v = column_weight(0, with_ops)
        for c in range(1, C):
            v = (v @ horizontal) * column_weight(c, with_ops)
        return v.sum()

    return total(True) / total(False)


def ising_energy(s, R, C):
    g = np.asarray(s).reshape(R, C)
    z = 1 - 2 * g
    return -(np.sum(z[:, :-1] * z[:, 1:]) + np.sum(z[:-1, :] * z[1:, :]))


def test_validation():
    a = np.ones((2, 1, 1, 2, 1))
    b = np.ones((2, 3, 1, 1, 1))
    with pytest.raises(ValueError):
        PepsState(((a, b),))
    with pytest.raises(ValueError):
        PepsState(((np.ones((2, 2, 1, 1, 1)),),))
    with pytest.raises(ValueError):
        ising_peps(-0.1, 2, 2)
    with pytest.raises(ValueError):
        BoundaryPlan(0)
    with pytest.raises(ValueError):
        exact_contract(random_peps(5, 4, 2))


def test_exact_matches_dense_vector():
    for seed, (R, C) in enumerate([(2, 2), (2, 3), (3, 2), (3, 3)]):
        p = random_peps(R, C, 2, seed=seed)
        v = p.to_dense()
        ref = np.vdot(v, v)
        assert abs(exact_contract(p) - ref) <= 1e-10 * abs(ref)


def test_exact_insertion_matches_dense():
    p = random_peps(2, 3, 2, seed=4)
    v = p.to_dense().reshape((2,) * 6)
    op = np.array([[0.3, 1 - 2j], [1 + 2j, -0.7]])
    w = np.tensordot(op, v, axes=(1, 4))
    w = np.moveaxis(w, 0, 4)
    ref = np.vdot(v.reshape(-1), w.reshape(-1))
    val = exact_contract(p, [(1, 1, op)])
    assert abs(val - ref) <= 1e-10 * abs(ref)


def test_product_peps():
    rng = np.random.default_rng(0)
    vecs = [[rng.standard_normal(2) + 1j * rng.standard_normal(2) for _ in range(3)] for _ in range(2)]
    p = product_peps(vecs)
    norms = np.array([[np.vdot(v, v).real for v in row] for row in vecs])
    assert np.isclose(exact_contract(p), np.prod(norms))
    zval = exact_contract(p, [(0, 2, Z)])
    v = vecs[0][2]
    expect = np.vdot(v, Z @ v).real * np.prod(norms) / norms[0, 2]
    assert np.isclose(zval, expect)
    val, trunc = boundary_contract(p, BoundaryPlan(1))
    assert np.isclose(val, np.prod(norms)) and trunc == 0


def test_lossless_boundary_matches_exact():
    p = random_peps(4, 4, 2, seed=0)
    ref = exact_contract(p)
    val, _ = boundary_contract(p, BoundaryPlan(chi=256))
    assert abs(val - ref) <= 1e-10 * abs(ref)
    val, _ = boundary_contract(p, BoundaryPlan(chi=256, sweep_direction="top_to_bottom"))
    assert abs(val - ref) <= 1e-10 * abs(ref)
    ins = [(1, 2, Z), (3, 0, Z)]
    ref = exact_contract(p, ins)
    val, _ = boundary_contract(p, BoundaryPlan(chi=16), ins)
    assert abs(val - ref) <= 1e-10 * abs(ref)


def test_chi_ladder_default_seed():
    p = random_peps(4, 4, 2, seed=0)
    ref = exact_contract(p)
    errs, truncs = [], []
    for chi in (2, 4, 8, 16):
        val, t = boundary_contract(p, BoundaryPlan(chi))
        errs.append(abs(val - ref) / abs(ref))
        truncs.append(t)
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert all(b <= a for a, b in zip(truncs, truncs[1:]))
    assert errs[-1] <= 1e-10


def test_boundary_bond_never_exceeds_chi(monkeypatch):
    seen = []
    real = peps_mod.compress

    def spy(state, chi, tol=0.0):
        out = real(state, chi, tol)
        seen.append(max(t.shape[2] for t in out[0].tensors))
        return out

    monkeypatch.setattr(peps_mod, "compress", spy)
    for chi in (1, 3, 5):
        seen.clear()
        boundary_contract(random_peps(4, 5, 2, seed=2), BoundaryPlan(chi))
        assert seen and max(seen) <= chi


def test_norm_positivity():
    for seed in range(5):
        p = random_peps(3, 4, 2, seed=seed)
        val, _ = boundary_contract(p, BoundaryPlan(8))
        assert val.real > 0 and abs(val.imag) <= 1e-10 * abs(val)


def test_deep_lattice_no_overflow():
    p = random_peps(3, 40, 2, seed=1)
    val, _ = boundary_contract(p, BoundaryPlan(8))
    assert np.isfinite(val)
    rep = expectation_report(p, [(1, 20, Z)], BoundaryPlan(8))
    assert -1 <= rep.value <= 1


@pytest.mark.parametrize("beta", [0.2, 0.7])
@pytest.mark.parametrize("shape", [(2, 2), (2, 3)])
def test_ising_amplitude_law(beta, shape):
    R, C = shape
    amps = ising_peps(beta, R, C).to_dense()
    probs = np.abs(amps) ** 2
    boltz = np.array([np.exp(-beta * ising_energy(s, R, C)) for s in itertools.product([0, 1], repeat=R * C)])
    ratio = probs / boltz
    assert np.max(np.abs(ratio / ratio[0] - 1)) <= 1e-10


def test_ising_beta_zero_uniform():
    amps = ising_peps(0.0, 2, 3).to_dense()
    assert np.allclose(np.abs(amps), np.abs(amps[0]))
    zz = two_site_expectation(ising_peps(0.0, 3, 3), (0, 0), Z, (2, 2), Z)
    assert abs(zz) <= 1e-12


def test_ising_saturation():
    zz = two_site_expectation(ising_peps(3.0, 4, 4), (0, 0), Z, (0, 1), Z, BoundaryPlan(16))
    assert abs(zz - 1) <= 1e-3


def test_ising_center_magnetization_vanishes():
    m = local_expectation(ising_peps(0.2, 4, 4), (1, 1), Z, BoundaryPlan(16))
    assert abs(m) <= 1e-8


@pytest.mark.parametrize(
    "beta,R,C,pairs,chi,tol",
    [
        (0.2, 4, 6, [((0, 0), (0, 1)), ((1, 2), (2, 2)), ((0, 0), (3, 5))], 16, 1e-8),
        (0.5, 4, 4, [((1, 1), (1, 2)), ((0, 0), (3, 3))], 32, 1e-6),
    ],
)
def test_ising_matches_transfer_matrix(beta, R, C, pairs, chi, tol):
    p = ising_peps(beta, R, C)
    for s1, s2 in pairs:
        val = two_site_expectation(p, s1, Z, s2, Z, BoundaryPlan(chi))
        assert abs(val - ising_tm_correlator(beta, R, C, [s1, s2])) <= tol


def test_tm_oracle_brute_force():
    beta, R, C = 0.4, 2, 3
    configs = list(itertools.product([0, 1], repeat=R * C))
    w = np.array([np.exp(-beta * ising_energy(s, R, C)) for s in configs])
    zz = np.array([(1 - 2 * s[0]) * (1 - 2 * s[4]) for s in configs])
    assert np.isclose(ising_tm_correlator(beta, R, C, [(0, 0), (1, 1)]), (w * zz).sum() / w.sum())


def test_default_plan():
    assert default_plan(random_peps(2, 2, 3)).chi == 36


def test_pepsz_roundtrip(tmp_path):
    p = random_peps(3, 2, 2, d=3, seed=6)
    save_pepsz(p, tmp_path / "s.pepsz")
    q = load_pepsz(tmp_path / "s.pepsz")
    assert q.shape == p.shape and q.phys_dim == 3
    for ra, rb in zip(p.grid, q.grid):
        for a, b in zip(ra, rb):
            assert np.array_equal(a, b)
