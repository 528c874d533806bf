"""Circuit-to-Hamiltonian (clock) construction for small verifier circuits.

The Hilbert space is ``register (x) clock``: the register holds ``n_qubits``
qubits (qubit 0 most significant, the first ``n_proof`` of them the proof)
and the clock is a single ``(T+1)``-level system.  With ``|t><t|`` acting
on the clock,

* ``H_init  = sum_a |1><1|_a (x) |0><0|``  over ancilla qubits ``a``,
* ``H_prop  = sum_t 1/2 (1 (x) (|t><t| + |t-1><t-1|)
  - U_t (x) |t><t-1| - U_t^dagger (x) |t-1><t|)``,
* ``H_final = |0><0|_accept (x) |T><T|``.

Zero-energy states of ``H_prop`` are the history states
``sum_t |psi_t> |t>`` with ``|psi_t> = U_t ... U_1 |psi_0>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import eigh_lowest, embed

MAX_DIM = 2**14
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Gate:
    qubits: tuple[int, ...]
    unitary: np.ndarray


@dataclass(frozen=True)
class Circuit:
    """Verifier circuit: ``gates[t-1]`` is ``U_t``; ``accept_qubit`` reads ``|1>`` as accept."""

    n_qubits: int
    n_proof: int
    gates: tuple[Gate, ...]
    accept_qubit: int

    def __post_init__(self):
        gates = tuple(
            g if isinstance(g, Gate) else Gate(tuple(int(q) for q in g[0]), np.asarray(g[1]))
            for g in self.gates
        )
        object.__setattr__(self, "gates", gates)
        if self.n_qubits < 1 or not 0 <= self.n_proof <= self.n_qubits:
            raise ValueError("need n_qubits >= 1 and 0 <= n_proof <= n_qubits")
        if not 0 <= self.accept_qubit < self.n_qubits:
            raise ValueError("accept_qubit out of range")
        if not gates:
            raise ValueError("a circuit needs at least one gate")
        for t, g in enumerate(gates, start=1):
            u = np.asarray(g.unitary, dtype=complex)
            k = len(g.qubits)
            if k not in (1, 2) or u.shape != (2**k, 2**k):
                raise ValueError(f"gate {t}: expected a 2x2 or 4x4 unitary on 1 or 2 qubits")
            if len(set(g.qubits)) != k or any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {t}: invalid qubit indices {g.qubits}")
            if np.max(np.abs(u.conj().T @ u - np.eye(2**k))) > UNITARY_TOL:
                raise ValueError(f"gate {t} is not unitary")

    @property
    def T(self) -> int:
        return len(self.gates)

    @property
    def ancillas(self) -> range:
        return range(self.n_proof, self.n_qubits)

    def register_unitary(self, t: int) -> np.ndarray:
        """``U_t`` on the whole register, ``t = 1..T``."""
        g = self.gates[t - 1]
        return embed(g.unitary, g.qubits, self.n_qubits, 2).toarray()


@dataclass(frozen=True)
class ClockInstance:
    circuit: Circuit
    h_init: np.ndarray
    h_prop: np.ndarray
    h_final: np.ndarray

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h_init + self.h_prop + self.h_final

    @property
    def parts(self) -> dict[str, np.ndarray]:
        return {"init": self.h_init, "prop": self.h_prop, "final": self.h_final}

    def ground(self, k: int = 4) -> tuple[np.ndarray, np.ndarray]:
        return eigh_lowest(self.hamiltonian, k)

    def ground_energy(self) -> float:
        return float(self.ground(1)[0][0])


def _clock_proj(T: int, t: int, s: int) -> np.ndarray:
    m = np.zeros((T + 1, T + 1))
    m[t, s] = 1.0
    return m


def compile(circuit: Circuit) -> ClockInstance:
    """Assemble ``H_init``, ``H_prop`` and ``H_final`` as dense matrices."""
    n, T = circuit.n_qubits, circuit.T
    dim = 2**n * (T + 1)
    if dim > MAX_DIM:
        raise ValueError(f"dimension 2^{n} * {T + 1} = {dim} exceeds {MAX_DIM}")
    reg = 2**n
    one = np.diag([0.0, 1.0])
    h_init = np.zeros((dim, dim), dtype=complex)
    for a in circuit.ancillas:
        h_init += np.kron(embed(one, [a], n, 2).toarray(), _clock_proj(T, 0, 0))
    h_prop = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(reg)
    for t in range(1, T + 1):
        u = circuit.register_unitary(t)
        h_prop += 0.5 * np.kron(eye, _clock_proj(T, t, t) + _clock_proj(T, t - 1, t - 1))
        h_prop -= 0.5 * np.kron(u, _clock_proj(T, t, t - 1))
        h_prop -= 0.5 * np.kron(u.conj().T, _clock_proj(T, t - 1, t))
    zero = np.diag([1.0, 0.0])
    h_final = np.kron(embed(zero, [circuit.accept_qubit], n, 2).toarray(), _clock_proj(T, T, T))
    return ClockInstance(circuit, h_init, h_prop, h_final.astype(complex))


def history_state(circuit: Circuit, proof: Sequence[complex]) -> np.ndarray:
    """``(T+1)^(-1/2) sum_t |psi_t> |t>`` from ``|psi_0> = proof (x) |0...0>``."""
    proof = np.asarray(proof, dtype=complex)
    if proof.shape != (2**circuit.n_proof,):
        raise ValueError(f"proof must have length 2^{circuit.n_proof}")
    if abs(np.linalg.norm(proof) - 1) > 1e-10:
        raise ValueError("proof must be normalized")
    anc = np.zeros(2 ** (circuit.n_qubits - circuit.n_proof))
    anc[0] = 1.0
    psi = np.kron(proof, anc)
    T = circuit.T
    out = np.zeros((2**circuit.n_qubits, T + 1), dtype=complex)
    out[:, 0] = psi
    for t in range(1, T + 1):
        psi = circuit.register_unitary(t) @ psi
        out[:, t] = psi
    return out.reshape(-1) / np.sqrt(T + 1)


def acceptance_probability(circuit: Circuit, proof: Sequence[complex]) -> float:
    """Probability that the accept qubit reads ``|1>`` after the circuit."""
    hist = history_state(circuit, proof).reshape(2**circuit.n_qubits, circuit.T + 1)
    final = hist[:, -1] * np.sqrt(circuit.T + 1)
    bits = (np.arange(2**circuit.n_qubits) >> (circuit.n_qubits - 1 - circuit.accept_qubit)) & 1
    return float(np.sum(np.abs(final[bits == 1]) ** 2))


# --- JSON ------------------------------------------------------------------


def _matrix_from_json(rows) -> np.ndarray:
    m = np.asarray(rows, dtype=float)
    if m.ndim == 3:
        return m[..., 0] + 1j * m[..., 1]
    return m.astype(complex)


def circuit_from_json(spec: dict) -> Circuit:
    """``{"n_qubits", "n_proof", "gates": [{"q": [...], "u": [[...]]}], "accept"}``.

    Matrix entries are real numbers or ``[re, im]`` pairs.
    """
    try:
        gates = tuple(Gate(tuple(g["q"]), _matrix_from_json(g["u"])) for g in spec["gates"])
        return Circuit(int(spec["n_qubits"]), int(spec["n_proof"]), gates, int(spec["accept"]))
    except KeyError as exc:
        raise ValueError(f"circuit JSON is missing field {exc}") from None


def circuit_to_json(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "n_proof": circuit.n_proof,
        "gates": [
            {
                "q": list(g.qubits),
                "u": [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(g.unitary, dtype=complex)],
            }
            for g in circuit.gates
        ],
        "accept": circuit.accept_qubit,
    }
