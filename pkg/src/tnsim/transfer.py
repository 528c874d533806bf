"""Transfer operators, expectation values and correlation functions of MPS.

Contractions sweep a doubled environment ``env[x, x', a, a']`` through the
chain: ``x, x'`` are the fixed outermost (ket, bra) bonds and ``a, a'`` the
running bonds.  For open chains ``x`` has dimension one and the sweep costs
``O(N d D^3)``; for rings the same code yields the trace of the product of
transfer matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .mps import MpsState

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class TransferOp:
    """``E[(a a'), (b b')] = sum_ij <j|O|i> A_i[a, b] conj(A_j[a', b'])``.

    ``matrix`` has shape ``(Dl**2, Dr**2)``, so end-of-chain tensors yield
    the boundary row/column vectors.
    """

    matrix: np.ndarray
    left_dim: int
    right_dim: int
    source_site: int | None = None

    def __post_init__(self):
        if self.matrix.shape != (self.left_dim**2, self.right_dim**2):
            raise ValueError("transfer matrix shape is not (Dl^2, Dr^2)")

    @property
    def bond_dim(self) -> int:
        if self.left_dim != self.right_dim:
            raise ValueError("boundary transfer operator has no single bond dimension")
        return self.left_dim

    def reshuffled(self) -> np.ndarray:
        """Choi form ``C[(a b), (a' b')]``; Hermitian PSD for a plain transfer operator."""
        dl, dr = self.left_dim, self.right_dim
        t = self.matrix.reshape(dl, dl, dr, dr)
        return t.transpose(0, 2, 1, 3).reshape(dl * dr, dl * dr)

    def spectrum(self) -> np.ndarray:
        return transfer_spectrum(self.matrix)


def transfer_op(a: np.ndarray, op: np.ndarray | None = None, site: int | None = None) -> TransferOp:
    a = np.asarray(a)
    dl, d, dr = a.shape
    if op is None:
        op = np.eye(d)
    op = np.asarray(op)
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match physical dimension {d}")
    m = np.einsum("ji,aib,cjd->acbd", op, a, a.conj()).reshape(dl * dl, dr * dr)
    return TransferOp(m, dl, dr, site)


def transfer_spectrum(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues by modulus (descending), ties by real then imaginary part.

    Taken from the diagonal of a complex Schur form so defective operators
    are handled without an eigenvector basis.
    """
    t, _ = scipy.linalg.schur(np.asarray(matrix, dtype=complex), output="complex")
    ev = np.diag(t)
    order = np.lexsort((-ev.imag, -ev.real, -np.round(np.abs(ev), 12)))
    return ev[order]


def correlation_length(a: np.ndarray) -> float:
    """``xi = -1 / ln|lambda_2 / lambda_1|`` of the transfer operator of ``a``.

    Returns ``0.0`` for ``D = 1`` (no second eigenvalue) and ``math.inf`` when
    the two leading eigenvalues have equal modulus (long-range order).
    """
    a = np.asarray(a)
    if a.ndim != 3 or a.shape[0] != a.shape[2]:
        raise ValueError("correlation length needs a square uniform site tensor")
    if a.shape[0] < 1:
        raise ValueError("bond dimension must be at least 1")
    ev = transfer_spectrum(transfer_op(a).matrix)
    lam1 = abs(ev[0])
    if lam1 == 0:
        raise ValueError("transfer operator is nilpotent")
    if len(ev) == 1:
        return 0.0
    ratio = abs(ev[1]) / lam1
    if abs(ratio - 1.0) <= DEGENERACY_TOL:
        return math.inf
    if ratio == 0:
        return 0.0
    return -1.0 / math.log(ratio)


# --- environment sweeps ----------------------------------------------------


def _initial_env(state: MpsState) -> np.ndarray:
    dx = state.tensors[0].shape[0]
    return np.einsum("xa,yb->xyab", np.eye(dx), np.eye(dx)).astype(complex)


def _absorb(env: np.ndarray, a: np.ndarray, op: np.ndarray | None = None) -> np.ndarray:
    # env[x,y,a,b] A[a,i,c] -> [x,y,b,i,c]
    t = np.tensordot(env, a, axes=(2, 0))
    if op is not None:
        t = np.tensordot(t, op, axes=(3, 1))  # [x,y,b,c,j]
        t = t.transpose(0, 1, 2, 4, 3)
    # contract b, j with conj(A)[b,j,d]
    return np.tensordot(t, a.conj(), axes=([2, 3], [0, 1])).transpose(0, 1, 2, 3)


def _absorb2(env: np.ndarray, a1: np.ndarray, a2: np.ndarray, op: np.ndarray) -> np.ndarray:
    d1, d2 = a1.shape[1], a2.shape[1]
    op4 = op.reshape(d1, d2, d1, d2)  # [j1, j2, i1, i2]
    t = np.tensordot(env, a1, axes=(2, 0))  # [x,y,b,i1,c]
    t = np.tensordot(t, a2, axes=(4, 0))  # [x,y,b,i1,i2,e]
    t = np.tensordot(t, op4, axes=([3, 4], [2, 3]))  # [x,y,b,e,j1,j2]
    t = np.tensordot(t, a1.conj(), axes=([2, 4], [0, 1]))  # [x,y,e,j2,d]
    t = np.tensordot(t, a2.conj(), axes=([4, 3], [0, 1]))  # [x,y,e,f]
    return t


def _close(env: np.ndarray) -> complex:
    return complex(np.einsum("xyxy->", env))


def _check_ops(state: MpsState, ops) -> list[tuple[int, np.ndarray, int]]:
    """Validate ``(site, operator)`` pairs; returns ``(site, op, width)``."""
    out = []
    last = -1
    for site, op in ops:
        site = int(site)
        op = np.asarray(op, dtype=complex)
        if not 0 <= site < state.N:
            raise ValueError(f"site {site} out of range")
        d = state.phys_dims[site]
        if op.shape == (d, d):
            width = 1
        else:
            if site + 1 >= state.N and state.boundary == "open":
                raise ValueError(f"two-site operator at site {site} runs off the chain")
            d2 = state.phys_dims[(site + 1) % state.N]
            if op.shape != (d * d2, d * d2):
                raise ValueError(f"operator shape {op.shape} does not fit site {site}")
            width = 2
        if site <= last:
            raise ValueError("operator sites must be sorted and non-overlapping")
        last = site + width - 1
        out.append((site, op, width))
    if state.boundary == "periodic" and out and last >= state.N and out[0][0] == 0:
        raise ValueError("operators overlap across the periodic seam")
    return out


def _rotate(state: MpsState, shift: int) -> MpsState:
    t = state.tensors
    return state.with_tensors(t[shift:] + t[:shift], center=None)


def _sandwich(state: MpsState, ops: list[tuple[int, np.ndarray, int]]) -> complex:
    """Unnormalized ``<psi| ops |psi> / |scale|^2``."""
    if any(site + width > state.N for site, _, width in ops):
        # a two-site term across the seam of a ring: rotate by one site
        state = _rotate(state, 1)
        ops = [((s - 1) % state.N, o, w) for s, o, w in ops]
        ops.sort(key=lambda x: x[0])
    by_site = {s: (o, w) for s, o, w in ops}
    env = _initial_env(state)
    s = 0
    while s < state.N:
        if s in by_site:
            op, width = by_site[s]
            if width == 1:
                env = _absorb(env, state.tensors[s], op)
            else:
                env = _absorb2(env, state.tensors[s], state.tensors[s + 1], op)
            s += width
        else:
            env = _absorb(env, state.tensors[s])
            s += 1
    return _close(env)


def expectation(state: MpsState, ops: Sequence[tuple[int, np.ndarray]]) -> complex:
    """``<psi| prod ops |psi> / <psi|psi>``.

    ``ops`` is a sorted list of ``(site, operator)``; an operator is either
    ``d x d`` or a ``d^2 x d^2`` term on ``(site, site + 1)``.  On rings a
    two-site term at the last site acts on ``(N-1, 0)``.
    """
    checked = _check_ops(state, ops)
    nrm = _sandwich(state, [])
    if abs(nrm) == 0:
        raise ValueError("zero-norm state")
    return _sandwich(state, checked) / nrm


def correlator(
    state: MpsState,
    p: np.ndarray,
    q: np.ndarray,
    i: int,
    j: int,
    connected: bool = False,
) -> complex:
    """Two-point function ``<P_i Q_j>``, optionally minus ``<P_i><Q_j>``."""
    if not i < j:
        raise ValueError("correlator needs i < j")
    raw = expectation(state, [(i, p), (j, q)])
    if not connected:
        return raw
    return raw - expectation(state, [(i, p)]) * expectation(state, [(j, q)])


def string_order(state: MpsState, op: np.ndarray, first: int, last: int) -> complex:
    """``<op_first op_{first+1} ... op_last>``."""
    return expectation(state, [(s, op) for s in range(first, last + 1)])


def left_environments(state: MpsState) -> list[np.ndarray]:
    """``envs[k]`` is the open-chain environment of sites ``0..k-1`` (shape ``(D, D)``)."""
    env = np.ones((1, 1, 1, 1), dtype=complex)
    envs = [env[0, 0]]
    for a in state.tensors:
        env = _absorb(env, a)
        envs.append(env[0, 0])
    return envs


def right_environments(state: MpsState) -> list[np.ndarray]:
    """``envs[k]`` is the open-chain environment of sites ``k..N-1``; ``envs[N]`` is trivial."""
    n = state.N
    envs: list[np.ndarray] = [None] * (n + 1)
    envs[n] = np.ones((1, 1), dtype=complex)
    for s in range(n - 1, -1, -1):
        a = state.tensors[s]
        t = np.tensordot(a, envs[s + 1], axes=(2, 0))  # [a,i,b']
        envs[s] = np.tensordot(t, a.conj(), axes=([1, 2], [1, 2]))
    return envs


def term_expectations(state: MpsState, terms) -> tuple[list[complex], complex]:
    """Unnormalized ``<psi|h|psi>`` for many local terms plus ``<psi|psi>``.

    Open chains reuse cached left and right environments, so each term costs
    one local contraction.  Values exclude ``|scale|^2``.
    """
    if state.boundary != "open":
        checked = [_check_ops(state, [(i, h)])[0] for i, h in terms]
        return [_sandwich(state, [c]) for c in checked], _sandwich(state, [])
    left = left_environments(state)
    right = right_environments(state)
    nrm = complex(np.trace(left[-1]))
    values = []
    for site, h, width in (_check_ops(state, [(i, h)])[0] for i, h in terms):
        env = left[site][None, None]
        if width == 1:
            env = _absorb(env, state.tensors[site], h)
        else:
            env = _absorb2(env, state.tensors[site], state.tensors[site + 1], h)
        values.append(complex(np.sum(env[0, 0] * right[site + width])))
    return values, nrm
