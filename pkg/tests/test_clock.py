import numpy as np
import pytest

from tnsim.clock import (
    Circuit,
    Gate,
    acceptance_probability,
    circuit_from_json,
    circuit_to_json,
    compile,
    history_state,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]])
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
CNOT = np.eye(4)[[0, 1, 3, 2]]


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ground_space(inst, tol=1e-9):
    w, v = np.linalg.eigh(inst.hamiltonian)
    return w, v[:, w <= w[0] + tol]


def x_verifier():
    return Circuit(1, 1, (Gate((0,), X),), accept_qubit=0)


def cnot_verifier():
    return Circuit(2, 1, (Gate((0, 1), CNOT),), accept_qubit=1)


def x_cnot_x_verifier():
    return Circuit(2, 1, (Gate((0,), X), Gate((0, 1), CNOT), Gate((0,), X)), accept_qubit=1)


def test_identity_circuit_accepts_proof_one():
    inst = compile(Circuit(1, 1, (Gate((0,), I2),), accept_qubit=0))
    w, g = ground_space(inst)
    assert abs(w[0]) <= 1e-10
    hist = history_state(inst.circuit, [0, 1])
    assert np.allclose(hist, np.array([0, 0, 1, 1]) / np.sqrt(2))
    assert abs(np.vdot(hist, inst.hamiltonian @ hist)) <= 1e-12


def test_x_gate_history_energy_zero():
    inst = compile(x_verifier())
    hist = history_state(inst.circuit, [1, 0])
    assert abs(np.vdot(hist, inst.hamiltonian @ hist)) <= 1e-12
    assert acceptance_probability(inst.circuit, [1, 0]) == pytest.approx(1)
    assert acceptance_probability(inst.circuit, [0, 1]) == pytest.approx(0)


@pytest.mark.parametrize("make,proof", [(x_verifier, [1, 0]), (cnot_verifier, [0, 1]), (x_cnot_x_verifier, [1, 0])])
def test_accepting_ground_is_history(make, proof):
    inst = compile(make())
    w, g = ground_space(inst)
    assert w[0] <= 1e-10
    hist = history_state(inst.circuit, proof)
    assert np.linalg.norm(g.conj().T @ hist) ** 2 >= 1 - 1e-9


def test_rejecting_instance():
    inst = compile(Circuit(1, 0, (Gate((0,), I2),), accept_qubit=0))
    e = inst.ground_energy()
    assert e > 1e-3
    assert e == pytest.approx(1 - np.sqrt(2) / 2, abs=1e-10)


@pytest.mark.parametrize("n,T", [(1, 1), (2, 3), (3, 2), (3, 4)])
def test_prop_kernel_dimension(n, T):
    rng = np.random.default_rng(n * 10 + T)
    gates = []
    for _ in range(T):
        if n > 1 and rng.random() < 0.5:
            q = tuple(int(x) for x in rng.choice(n, 2, replace=False))
            gates.append(Gate(q, random_unitary(4, rng)))
        else:
            gates.append(Gate((int(rng.integers(n)),), random_unitary(2, rng)))
    inst = compile(Circuit(n, 1, tuple(gates), accept_qubit=0))
    w = np.linalg.eigvalsh(inst.h_prop)
    assert np.count_nonzero(np.abs(w) <= 1e-10) == 2**n
    assert w.min() >= -1e-10
    for name, part in inst.parts.items():
        assert np.allclose(part, part.conj().T, atol=1e-12), name
        assert np.linalg.eigvalsh(part).min() >= -1e-10, name
    assert np.allclose(inst.hamiltonian, sum(inst.parts.values()))


def test_random_circuit_history_in_prop_kernel():
    rng = np.random.default_rng(3)
    gates = (Gate((0, 1), random_unitary(4, rng)), Gate((1,), random_unitary(2, rng)), Gate((1, 0), random_unitary(4, rng)))
    circ = Circuit(2, 2, gates, accept_qubit=1)
    inst = compile(circ)
    proof = random_unitary(4, rng)[:, 0]
    hist = history_state(circ, proof)
    assert np.isclose(np.linalg.norm(hist), 1)
    assert abs(np.vdot(hist, inst.h_prop @ hist)) <= 1e-12


def test_validation():
    with pytest.raises(ValueError):
        Circuit(1, 1, (Gate((0,), np.array([[1, 1], [0, 1]])),), 0)
    with pytest.raises(ValueError):
        Circuit(1, 1, (Gate((1,), X),), 0)
    with pytest.raises(ValueError):
        Circuit(2, 1, (Gate((0, 0), CNOT),), 0)
    with pytest.raises(ValueError):
        Circuit(1, 1, (), 0)
    with pytest.raises(ValueError):
        Circuit(1, 2, (Gate((0,), X),), 0)
    with pytest.raises(ValueError):
        compile(Circuit(12, 1, tuple(Gate((0,), X) for _ in range(4)), 0))
    with pytest.raises(ValueError):
        history_state(x_verifier(), [1, 0, 0])
    with pytest.raises(ValueError):
        history_state(x_verifier(), [1, 1])


def test_json_roundtrip():
    circ = Circuit(2, 1, (Gate((0,), H), Gate((0, 1), CNOT)), accept_qubit=1)
    back = circuit_from_json(circuit_to_json(circ))
    assert back.n_qubits == 2 and back.n_proof == 1 and back.accept_qubit == 1
    assert np.allclose(compile(back).hamiltonian, compile(circ).hamiltonian)
    simple = circuit_from_json({"n_qubits": 1, "n_proof": 1, "gates": [{"q": [0], "u": [[0, 1], [1, 0]]}], "accept": 0})
    assert np.allclose(simple.gates[0].unitary, X)
    with pytest.raises(ValueError):
        circuit_from_json({"n_qubits": 1, "gates": []})
