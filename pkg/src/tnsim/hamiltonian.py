"""Nearest-neighbour chain Hamiltonians and the dense exact-diagonalization oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .mps import MpsState
from .transfer import term_expectations

HERMITIAN_TOL = 1e-12
DENSE_ED_LIMIT = 2**10
ED_LIMIT = 2**16

# --- local operators -------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def spin_matrices(spin: float) -> dict[str, np.ndarray]:
    """``Sx, Sy, Sz, Sp, Sm`` in the basis ``m = S, S-1, ..., -S``."""
    dim = int(round(2 * spin + 1))
    m = spin - np.arange(dim)
    sp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        sp[k - 1, k] = np.sqrt(spin * (spin + 1) - m[k] * (m[k] + 1))
    sm = sp.conj().T
    return {
        "Sx": (sp + sm) / 2,
        "Sy": (sp - sm) / 2j,
        "Sz": np.diag(m).astype(complex),
        "Sp": sp,
        "Sm": sm,
        "I": np.eye(dim, dtype=complex),
    }


def local_operator(name: str, d: int) -> np.ndarray:
    """Look up a named single-site operator (Pauli names for d=2, spin names for any d)."""
    if d == 2 and name in PAULI:
        return PAULI[name].copy()
    ops = spin_matrices((d - 1) / 2)
    if name in ops:
        return ops[name].copy()
    raise ValueError(f"unknown operator {name!r} for d={d}")


def spin_dot(d: int) -> np.ndarray:
    s = spin_matrices((d - 1) / 2)
    return sum(np.kron(s[k], s[k]) for k in ("Sx", "Sy", "Sz")).real.astype(complex)


# --- the Hamiltonian -------------------------------------------------------


@dataclass(frozen=True)
class NnHamiltonian:
    """``H = sum_i h_{i,i+1}``; term ``(i, h)`` acts on sites ``i`` and ``i+1`` (0-based).

    On a periodic chain a term at ``i = N-1`` couples sites ``N-1`` and ``0``.
    """

    N: int
    d: int
    terms: tuple[tuple[int, np.ndarray], ...]
    boundary: str = "open"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("a chain Hamiltonian needs N >= 2")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        top = self.N - 1 if self.boundary == "periodic" else self.N - 2
        clean = []
        for i, h in self.terms:
            h = np.asarray(h, dtype=complex)
            if h.shape != (self.d**2, self.d**2):
                raise ValueError(f"term at {i} has shape {h.shape}, expected d^2 x d^2")
            if not 0 <= i <= top:
                raise ValueError(f"term site {i} outside 0..{top}")
            if not np.all(np.isfinite(h)):
                raise ValueError(f"term at site {i} has non-finite entries")
            if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise ValueError(f"term at site {i} is not Hermitian")
            clean.append((int(i), h))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def dim(self) -> int:
        return self.d**self.N


def _tfi_terms(N, J, g, boundary):
    X, Z, I = PAULI["X"], PAULI["Z"], PAULI["I"]
    bonds = list(range(N if boundary == "periodic" else N - 1))
    degree = np.zeros(N)
    for b in bonds:
        degree[b] += 1
        degree[(b + 1) % N] += 1
    # each site field is shared among its bonds, so chain ends carry it whole
    return [
        (b, -J * np.kron(Z, Z) - g * (np.kron(X, I) / degree[b] + np.kron(I, X) / degree[(b + 1) % N]))
        for b in bonds
    ]


def aklt_term() -> np.ndarray:
    ss = spin_dot(3)
    return 0.5 * ss + ss @ ss / 6.0 + np.eye(9) / 3.0


def model(kind: str, N: int, boundary: str = "open", **params) -> NnHamiltonian:
    """Build a built-in chain model.

    Kinds: ``tfi`` (``J``, ``g``): ``-J sum ZZ - g sum X``; ``heisenberg_spin1``
    (``J``, default 1): ``J sum S.S``; ``aklt``; ``custom`` (``terms``, ``d``).
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    bonds = range(N if boundary == "periodic" else N - 1)
    if kind == "tfi":
        J = float(params.get("J", 1.0))
        g = float(params.get("g", 1.0))
        return NnHamiltonian(N, 2, tuple(_tfi_terms(N, J, g, boundary)), boundary,
                             {"kind": "tfi", "J": J, "g": g})
    if kind == "heisenberg_spin1":
        J = float(params.get("J", 1.0))
        h = J * spin_dot(3)
        return NnHamiltonian(N, 3, tuple((b, h) for b in bonds), boundary,
                             {"kind": kind, "J": J})
    if kind == "aklt":
        h = aklt_term()
        return NnHamiltonian(N, 3, tuple((b, h) for b in bonds), boundary, {"kind": kind})
    if kind == "custom":
        terms = params["terms"]
        d = int(params.get("d") or round(np.sqrt(np.asarray(terms[0][1]).shape[0])))
        return NnHamiltonian(N, d, tuple((int(i), np.asarray(h)) for i, h in terms), boundary,
                             {"kind": kind})
    raise ValueError(f"unknown model kind {kind!r}")


def zero_hamiltonian(N: int, d: int = 2, boundary: str = "open") -> NnHamiltonian:
    return NnHamiltonian(N, d, tuple((b, np.zeros((d * d, d * d))) for b in range(N - 1)), boundary)


# --- dense assembly --------------------------------------------------------


def embed(op: np.ndarray, sites: Sequence[int], N: int, d: int) -> scipy.sparse.csr_matrix:
    """Sparse ``d^N x d^N`` matrix of ``op`` acting on ``sites`` (in that order).

    Site 0 is the most significant digit of the basis index.
    """
    sites = list(sites)
    k = len(sites)
    op = np.asarray(op, dtype=complex)
    if op.shape != (d**k, d**k):
        raise ValueError("operator size does not match the number of sites")
    rest = [s for s in range(N) if s not in sites]
    place = d ** (N - 1 - np.arange(N))

    def digits(sub):
        if not sub:
            return np.zeros(1, dtype=int)
        grid = np.array(np.unravel_index(np.arange(d ** len(sub)), (d,) * len(sub))).T
        return grid @ place[sub]

    loc_idx = digits(sites)
    oth_idx = digits(rest)
    index = loc_idx[:, None] + oth_idx[None, :]  # (d^k, d^(N-k))
    r, c = np.nonzero(op)
    rows = index[r].ravel()
    cols = index[c].ravel()
    vals = np.repeat(op[r, c], index.shape[1])
    dim = d**N
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def dense_terms(H: NnHamiltonian) -> list[scipy.sparse.csr_matrix]:
    return [embed(h, [i, (i + 1) % H.N], H.N, H.d) for i, h in H.terms]


def sparse_matrix(H: NnHamiltonian) -> scipy.sparse.csr_matrix:
    if H.dim > ED_LIMIT:
        raise ValueError(f"d^N = {H.dim} exceeds the ED limit {ED_LIMIT}")
    total = scipy.sparse.csr_matrix((H.dim, H.dim), dtype=complex)
    for t in dense_terms(H):
        total = total + t
    return total


def dense_matrix(H: NnHamiltonian) -> np.ndarray:
    return sparse_matrix(H).toarray()


@dataclass(frozen=True)
class EdResult:
    ground_energy: float
    ground_vector: np.ndarray
    spectrum_head: np.ndarray

    def degeneracy(self, tol: float = 1e-8) -> int:
        return int(np.count_nonzero(self.spectrum_head - self.ground_energy < tol))


def fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def eigh_lowest(m, k: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a Hermitian matrix (dense or sparse)."""
    dim = m.shape[0]
    k = min(k, dim)
    if dim <= DENSE_ED_LIMIT:
        dense = m.toarray() if scipy.sparse.issparse(m) else np.asarray(m)
        w, v = np.linalg.eigh(dense)
        return w[:k], v[:, :k]
    w, v = scipy.sparse.linalg.eigsh(m, k=min(k, dim - 2), which="SA", tol=1e-12)
    order = np.argsort(w)
    return w[order], v[:, order]


def exact_diagonalize(H, k: int = 6) -> EdResult:
    """Ground energy, phase-fixed ground vector and the lowest ``k`` eigenvalues.

    ``H`` may be an :class:`NnHamiltonian` or any Hermitian matrix.  Matrices
    up to ``2**10`` are solved densely, larger ones (up to ``2**16``) with a
    sparse Lanczos solver.
    """
    m = sparse_matrix(H) if isinstance(H, NnHamiltonian) else H
    if m.shape[0] > ED_LIMIT:
        raise ValueError(f"dimension {m.shape[0]} exceeds the ED limit {ED_LIMIT}")
    w, v = eigh_lowest(m, k)
    g = v[:, 0] / np.linalg.norm(v[:, 0])
    return EdResult(float(w[0]), fix_phase(g), np.asarray(w, dtype=float))


def energy(state: MpsState, H: NnHamiltonian) -> float:
    """``<psi|H|psi> / <psi|psi>``, summed in ascending term order."""
    if state.N != H.N or any(d != H.d for d in state.phys_dims):
        raise ValueError("state and Hamiltonian live on different chains")
    if H.boundary == "periodic" and state.boundary == "open":
        if any(i == H.N - 1 for i, _ in H.terms):
            raise ValueError("periodic Hamiltonian needs a periodic state for the seam term")
    values, nrm = term_expectations(state, H.terms)
    if abs(nrm) == 0:
        raise ValueError("zero-norm state")
    total = 0.0
    for v in values:
        total += v.real
    return total / nrm.real


# --- JSON ------------------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ValueError("matrix must be nested [re, im] pairs or plain reals")


def model_from_json(spec: dict) -> NnHamiltonian:
    """``{"kind": "tfi", "N": 10, "J": 1.0, "g": 1.0, "boundary": "open"}`` and friends.

    Custom models carry ``"terms": [{"site": i, "h": [[[re, im], ...], ...]}, ...]``.
    """
    spec = dict(spec)
    kind = spec.pop("kind")
    N = int(spec.pop("N"))
    boundary = spec.pop("boundary", "open")
    if kind == "custom":
        terms = [(int(t["site"]), _matrix_from_json(t["h"])) for t in spec.pop("terms")]
        return model("custom", N, boundary, terms=terms, d=spec.get("d"))
    return model(kind, N, boundary, **spec)


def model_to_json(H: NnHamiltonian) -> dict:
    kind = H.meta.get("kind")
    if kind in ("tfi", "heisenberg_spin1", "aklt"):
        out = {"kind": kind, "N": H.N, "boundary": H.boundary}
        out.update({k: v for k, v in H.meta.items() if k != "kind"})
        return out
    return {
        "kind": "custom",
        "N": H.N,
        "d": H.d,
        "boundary": H.boundary,
        "terms": [{"site": i, "h": _matrix_to_json(h)} for i, h in H.terms],
    }
