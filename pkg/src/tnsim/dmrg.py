"""Single-site DMRG for open nearest-neighbour chains.

The state is kept in mixed canonical form with the center on the site being
optimized, so the norm quadratic form is the identity and each local step is
an ordinary Hermitian eigenproblem.  Environments are carried as operators
on the (bond, physical) space of the current site:

* ``left_env[k]``  acts on ``(a, i_k)`` and holds every term on sites ``< k``
  plus the term ``(k-1, k)``;
* ``right_env[k]`` acts on ``(i_k, b)`` and holds every term on sites ``> k``
  plus the term ``(k, k+1)``.

The effective matrix at site ``k`` is ``kron(left_env, 1) + kron(1, right_env)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .hamiltonian import NnHamiltonian
from .mps import MpsState, canonicalize, random_mps

DENSE_LIMIT = 256
HERMITIAN_TOL = 1e-8


@dataclass(frozen=True)
class DmrgOptions:
    D_max: int = 16
    max_sweeps: int = 20
    energy_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.D_max < 1 or self.max_sweeps < 1:
            raise ValueError("D_max and max_sweeps must be positive")
        if not 0 < self.energy_tol < 1:
            raise ValueError("energy_tol must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class DmrgReport:
    energy: float
    state: MpsState
    energy_history: list[float]
    converged: bool
    sweeps_used: int
    site_energies: list[float] = field(default_factory=list, repr=False)


def _bond_terms(H: NnHamiltonian) -> list[np.ndarray | None]:
    terms: list[np.ndarray | None] = [None] * (H.N - 1)
    for i, h in H.terms:
        terms[i] = h if terms[i] is None else terms[i] + h
    return terms


def _grow_left(q: np.ndarray, left_env: np.ndarray, h: np.ndarray | None) -> np.ndarray:
    """Left environment of site ``k+1`` from the left-isometric tensor ``q`` of site ``k``."""
    dl, d, dr = q.shape
    qm = q.reshape(dl * d, dr)
    block = qm.conj().T @ left_env @ qm
    env = np.kron(block, np.eye(d))
    if h is not None:
        d2 = h.shape[0] // d
        h4 = h.reshape(d, d2, d, d2)  # [j', i', j, i]
        env = env + np.einsum("xpa,pqjr,xjb->aqbr", q.conj(), h4, q, optimize=True).reshape(
            dr * d2, dr * d2
        )
    return env


def _grow_right(q: np.ndarray, right_env: np.ndarray, h: np.ndarray | None) -> np.ndarray:
    """Right environment of site ``k-1`` from the right-isometric tensor ``q`` of site ``k``."""
    dl, d, dr = q.shape
    qm = q.reshape(dl, d * dr)
    block = qm.conj() @ right_env @ qm.T
    env = np.kron(np.eye(d), block)
    if h is not None:
        d1 = h.shape[0] // d
        h4 = h.reshape(d1, d, d1, d)  # [i', j', i, j]
        env = env + np.einsum("apy,qprj,bjy->qarb", q.conj(), h4, q, optimize=True).reshape(
            d1 * dl, d1 * dl
        )
    return env


def effective_matrix(left_env: np.ndarray, right_env: np.ndarray, shape) -> np.ndarray:
    dl, d, dr = shape
    return np.kron(left_env, np.eye(dr)) + np.kron(np.eye(dl), right_env)


def optimize_site(
    tensor: np.ndarray, left_env: np.ndarray, right_env: np.ndarray
) -> tuple[np.ndarray, float]:
    """Minimize the Rayleigh quotient over one site tensor.

    ``tensor`` only fixes the shape and seeds the iterative solver; the
    environments must belong to a canonical center at this site.  Returns
    the unit-norm minimizer and its energy.
    """
    dl, d, dr = tensor.shape
    if left_env.shape != (dl * d, dl * d) or right_env.shape != (d * dr, d * dr):
        raise ValueError("environment shapes do not match the site tensor")
    for env in (left_env, right_env):
        scale = max(1.0, float(np.max(np.abs(env), initial=0.0)))
        if np.max(np.abs(env - env.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
            raise RuntimeError("effective Hamiltonian is not Hermitian")
    n = dl * d * dr
    if n <= DENSE_LIMIT:
        x = effective_matrix(left_env, right_env, tensor.shape)
        w, v = np.linalg.eigh(x)
        vec, e = v[:, 0], float(w[0])
    else:

        def matvec(v):
            v = v.reshape(dl * d, dr)
            out = left_env @ v
            out = out + (v.reshape(dl, d * dr) @ right_env.T).reshape(dl * d, dr)
            return out.ravel()

        op = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec, dtype=complex)
        w, v = scipy.sparse.linalg.eigsh(op, k=1, which="SA", v0=tensor.ravel(), tol=1e-10)
        vec, e = v[:, 0], float(w[0])
    vec = vec / np.linalg.norm(vec)
    return vec.reshape(dl, d, dr), e


def run_dmrg(H: NnHamiltonian, opts: DmrgOptions) -> DmrgReport:
    """Ground-state search by single-site sweeps ``0 -> N-1 -> 0``.

    Starts from a seeded random MPS whose bonds are fixed at
    ``min(D_max, d^k, d^(N-k))``.  A sweep ends after the right-to-left pass;
    the run stops when consecutive sweep energies differ by less than
    ``opts.energy_tol`` or after ``opts.max_sweeps`` sweeps.
    """
    if H.boundary != "open":
        raise ValueError("DMRG supports open boundary only")
    N, d = H.N, H.d
    rng = np.random.default_rng(opts.seed)
    state = canonicalize(random_mps(N, opts.D_max, d, rng=rng), 0)
    tensors = list(state.tensors)
    terms = _bond_terms(H)

    left = [None] * N
    right = [None] * N
    left[0] = np.zeros((d, d), dtype=complex)
    right[N - 1] = np.zeros((d, d), dtype=complex)
    for k in range(N - 1, 0, -1):
        right[k - 1] = _grow_right(tensors[k], right[k], terms[k - 1])

    history: list[float] = []
    site_energies: list[float] = []
    converged = False
    e = np.inf
    for sweep in range(opts.max_sweeps):
        for k in range(N - 1):
            a, e = optimize_site(tensors[k], left[k], right[k])
            site_energies.append(e)
            dl, _, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl * d, dr))
            tensors[k] = q.reshape(dl, d, q.shape[1])
            tensors[k + 1] = np.tensordot(r, tensors[k + 1], axes=(1, 0))
            left[k + 1] = _grow_left(tensors[k], left[k], terms[k])
        for k in range(N - 1, 0, -1):
            a, e = optimize_site(tensors[k], left[k], right[k])
            site_energies.append(e)
            dl, _, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl, d * dr).conj().T)
            tensors[k] = q.conj().T.reshape(q.shape[1], d, dr)
            tensors[k - 1] = np.tensordot(tensors[k - 1], r.conj().T, axes=(2, 0))
            right[k - 1] = _grow_right(tensors[k], right[k], terms[k - 1])
        history.append(e)
        if len(history) > 1 and abs(history[-1] - history[-2]) < opts.energy_tol:
            converged = True
            break
    c = np.linalg.norm(tensors[0])
    tensors[0] = tensors[0] / c
    final = MpsState(tuple(tensors), scale=1.0, center=0)
    return DmrgReport(
        energy=float(history[-1]),
        state=final,
        energy_history=history,
        converged=converged,
        sweeps_used=len(history),
        site_energies=site_energies,
    )
