"""Reduced density matrices, parent Hamiltonians and injectivity of MPS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import NnHamiltonian, embed, model_to_json
from .mps import MpsState
from .transfer import _absorb, left_environments, right_environments

RANK_TOL = 1e-10
MAX_WINDOW_DIM = 2**14


def _window_tensor(state: MpsState, first: int, k: int) -> np.ndarray:
    """Contract sites ``first .. first+k-1`` into ``W[a, i1..ik, b]`` reshaped ``(Dl, d^k, Dr)``."""
    sites = [(first + j) % state.N for j in range(k)]
    w = state.tensors[sites[0]]
    for s in sites[1:]:
        w = np.tensordot(w, state.tensors[s], axes=(w.ndim - 1, 0))
    return w.reshape(w.shape[0], -1, w.shape[-1])


def _complement_env(state: MpsState, first: int, k: int) -> np.ndarray:
    """Environment ``E[b, b', a, a']`` of every site outside the window.

    ``b`` is the bond leaving the window on the right, ``a`` the bond entering
    it on the left; primed indices belong to the bra.
    """
    n = state.N
    if state.boundary == "open":
        left = left_environments(state)[first]
        right = right_environments(state)[first + k]
        return np.einsum("bc,ad->bcad", right, left)
    rest = [(first + k + j) % n for j in range(n - k)]
    db = state.tensors[(first + k - 1) % n].shape[2]
    env = np.einsum("xa,yb->xyab", np.eye(db), np.eye(db)).astype(complex)
    for s in rest:
        env = _absorb(env, state.tensors[s])
    return env


def reduced_density(state: MpsState, first_site: int, k: int) -> np.ndarray:
    """Normalized ``d^k x d^k`` reduced density matrix of ``k`` consecutive sites.

    Built from the window tensors and the environment of the complement, so
    the full state vector is never formed.  On rings the window may wrap.
    """
    n = state.N
    if k < 1 or k > n:
        raise ValueError("window length out of range")
    if state.boundary == "open" and first_site + k > n:
        raise ValueError("window runs off the open chain")
    if not 0 <= first_site < n:
        raise ValueError("first_site out of range")
    dim = int(np.prod([state.phys_dims[(first_site + j) % n] for j in range(k)]))
    if dim > MAX_WINDOW_DIM:
        raise ValueError(f"window dimension {dim} exceeds {MAX_WINDOW_DIM}")
    w = _window_tensor(state, first_site, k)
    env = _complement_env(state, first_site, k)
    # rho[i, j] = sum W[a,i,b] conj(W[a',j,b']) E[b,b',a,a']
    t = np.tensordot(w, env, axes=([0, 2], [2, 0]))  # [i, b', a']
    rho = np.tensordot(t, w.conj(), axes=([2, 1], [0, 2]))  # [i, j]
    tr = np.trace(rho)
    if abs(tr) == 0:
        raise ValueError("zero-norm state")
    rho = rho / tr
    return (rho + rho.conj().T) / 2


def support_projector(rho: np.ndarray, rank_tol: float = RANK_TOL) -> tuple[np.ndarray, int]:
    w, v = np.linalg.eigh(rho)
    keep = w > rank_tol
    vs = v[:, keep]
    return vs @ vs.conj().T, int(np.count_nonzero(keep))


@dataclass(frozen=True)
class ParentHam:
    """``H = sum_windows (1 - Pi_supp(rho_k))``; ``terms`` holds ``(first_site, h)``."""

    block_size: int
    terms: tuple[tuple[int, np.ndarray], ...]
    trivial: tuple[bool, ...]
    ranks: tuple[int, ...]
    underlying: MpsState
    rank_tol: float = RANK_TOL

    @property
    def N(self) -> int:
        return self.underlying.N

    @property
    def d(self) -> int:
        return self.underlying.phys_dims[0]

    def dense_matrix(self, N: int | None = None, boundary: str | None = None) -> np.ndarray:
        """Assemble the terms on a chain of ``N`` sites.

        With ``N`` different from the source chain, the first term is treated
        as translation invariant and placed on every window of the new chain.
        """
        n = self.N if N is None else N
        boundary = self.underlying.boundary if boundary is None else boundary
        k, d = self.block_size, self.d
        if N is None:
            placed = self.terms
        else:
            h = self.terms[len(self.terms) // 2][1]
            starts = range(n if boundary == "periodic" else n - k + 1)
            placed = tuple((s, h) for s in starts)
        total = 0
        for s, h in placed:
            total = total + embed(h, [(s + j) % n for j in range(k)], n, d)
        return total.toarray()

    def to_hamiltonian(self) -> NnHamiltonian:
        if self.block_size != 2:
            raise ValueError("only two-site parent Hamiltonians map onto NnHamiltonian")
        return NnHamiltonian(
            self.N, self.d, self.terms, self.underlying.boundary, {"kind": "custom"}
        )

    def to_json(self) -> dict:
        """Custom-terms model JSON readable by ``model_from_json``."""
        return model_to_json(self.to_hamiltonian())


def parent_hamiltonian(state: MpsState, k: int, rank_tol: float = RANK_TOL) -> ParentHam:
    """One projector term ``1 - Pi_supp(rho_k)`` per window of ``k`` sites.

    Windows whose reduced density matrix has full rank give a zero term and
    are flagged in ``trivial`` rather than rejected.
    """
    n = state.N
    starts = range(n) if state.boundary == "periodic" else range(n - k + 1)
    terms, trivial, ranks = [], [], []
    for s in starts:
        rho = reduced_density(state, s, k)
        proj, rank = support_projector(rho, rank_tol)
        terms.append((s, np.eye(rho.shape[0]) - proj))
        trivial.append(rank == rho.shape[0])
        ranks.append(rank)
    return ParentHam(k, tuple(terms), tuple(trivial), tuple(ranks), state, rank_tol)


def blocked_matrix(a: np.ndarray, k: int) -> np.ndarray:
    """``D^2 x d^k`` matrix with entries ``(A_{i1} ... A_{ik})[alpha, beta]``."""
    dl, d, dr = a.shape
    m = a
    for _ in range(k - 1):
        m = np.tensordot(m, a, axes=(m.ndim - 1, 0))
    m = m.reshape(dl, d**k, dr)
    return m.transpose(0, 2, 1).reshape(dl * dr, d**k)


def blocked_rank(a: np.ndarray, k: int, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(blocked_matrix(a, k), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def injectivity_check(a: np.ndarray, k_max: int, tol: float = RANK_TOL) -> tuple[bool, int | None]:
    """Smallest blocking length ``k <= k_max`` at which ``X -> sum tr[A..A X]|i>`` is injective.

    Singular values count toward the rank when they exceed ``tol`` times the
    largest one.
    """
    a = np.asarray(a)
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    dl, d, dr = a.shape
    if d**k_max > MAX_WINDOW_DIM:
        raise ValueError("d^k_max exceeds the window limit")
    for k in range(1, k_max + 1):
        if blocked_rank(a, k, tol) == dl * dr:
            return True, k
    return False, None
