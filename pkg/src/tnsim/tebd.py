"""First-order Trotter time evolution of MPS and thermal MPDOs.

A step is one layer of gates on the even bonds ``(0,1), (2,3), ...`` followed
by one on the odd bonds ``(1,2), (3,4), ...``, i.e. the step operator is
``exp(-i H_odd tau) exp(-i H_even tau)``.  Real time uses the Schrodinger
sign ``exp(-i H t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hamiltonian import NnHamiltonian
from .mps import MpsState, canonicalize
from .tensor import svd_matrix

MODES = ("real", "imaginary")
DEFAULT_TOL = 1e-14


@dataclass(frozen=True)
class TrotterPlan:
    tau: float
    steps: int
    layers: tuple[tuple[tuple[int, np.ndarray], ...], ...]  # (even, odd)
    mode: str
    order: int = 1


def bond_gate(h: np.ndarray, tau: float, mode: str) -> np.ndarray:
    """``exp(-i h tau)`` (real) or ``exp(-h tau)`` (imaginary) via the spectrum of ``h``."""
    w, v = np.linalg.eigh(h)
    with np.errstate(over="ignore", invalid="ignore"):
        phase = np.exp(-1j * w * tau) if mode == "real" else np.exp(-w * tau)
    if not np.all(np.isfinite(phase)):
        raise FloatingPointError(f"bond gate overflows at tau = {tau}")
    return (v * phase) @ v.conj().T


def trotter_plan(H: NnHamiltonian, t: float, M: int, mode: str = "real") -> TrotterPlan:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if M < 1:
        raise ValueError("M must be at least 1")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if H.boundary != "open":
        raise ValueError("Trotter evolution supports open chains only")
    tau = t / M
    bond_h: dict[int, np.ndarray] = {}
    for i, h in H.terms:
        bond_h[i] = bond_h[i] + h if i in bond_h else h
    even = tuple((b, bond_gate(bond_h[b], tau, mode)) for b in sorted(bond_h) if b % 2 == 0)
    odd = tuple((b, bond_gate(bond_h[b], tau, mode)) for b in sorted(bond_h) if b % 2 == 1)
    return TrotterPlan(tau=tau, steps=M, layers=(even, odd), mode=mode)


class _Chain:
    """Mutable working copy of an open MPS kept in mixed canonical form."""

    def __init__(self, state: MpsState):
        st = canonicalize(state, 0)
        self.tensors = list(st.tensors)
        self.tensors[0] = self.tensors[0] * st.scale
        self.center = 0

    def move_to(self, k: int):
        t = self.tensors
        while self.center < k:
            c = self.center
            dl, d, dr = t[c].shape
            q, r = np.linalg.qr(t[c].reshape(dl * d, dr))
            t[c] = q.reshape(dl, d, q.shape[1])
            t[c + 1] = np.tensordot(r, t[c + 1], axes=(1, 0))
            self.center += 1
        while self.center > k:
            c = self.center
            dl, d, dr = t[c].shape
            q, r = np.linalg.qr(t[c].reshape(dl, d * dr).conj().T)
            t[c] = q.conj().T.reshape(q.shape[1], d, dr)
            t[c - 1] = np.tensordot(t[c - 1], r.conj().T, axes=(2, 0))
            self.center -= 1

    def apply(self, k: int, gate: np.ndarray, D_max: int | None, tol: float) -> float:
        """Apply a two-site gate on ``(k, k+1)``; returns the relative discarded weight."""
        self.move_to(k)
        a, b = self.tensors[k], self.tensors[k + 1]
        dl, d1, _ = a.shape
        _, d2, dr = b.shape
        theta = np.tensordot(a, b, axes=(2, 0))  # [a, i1, i2, b]
        g = gate.reshape(d1, d2, d1, d2)
        theta = np.tensordot(g, theta, axes=([2, 3], [1, 2]))  # [i1', i2', a, b]
        theta = theta.transpose(2, 0, 1, 3).reshape(dl * d1, d2 * dr)
        u, s, vh, discarded = svd_matrix(theta, D_max, tol)
        total = discarded + float(np.sum(s**2))
        self.tensors[k] = u.reshape(dl, d1, len(s))
        self.tensors[k + 1] = (s[:, None] * vh).reshape(len(s), d2, dr)
        self.center = k + 1
        return discarded / total if total > 0 else 0.0

    def center_norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def rescale(self, factor: float):
        self.tensors[self.center] = self.tensors[self.center] * factor

    def state(self) -> MpsState:
        c = self.center_norm()
        tensors = list(self.tensors)
        if c > 0:
            tensors[self.center] = tensors[self.center] / c
        return MpsState(tuple(tensors), scale=c, center=self.center)


def _run_plan(chain: _Chain, plan: TrotterPlan, D_max, tol, on_layer=None, on_step=None) -> float:
    cumulative = 0.0
    for step in range(plan.steps):
        for layer in plan.layers:
            for bond, gate in layer:
                cumulative += chain.apply(bond, gate, D_max, tol)
            if on_layer is not None:
                on_layer()
        if on_step is not None:
            on_step(step + 1, cumulative)
    return cumulative


def evolve(
    state: MpsState,
    H: NnHamiltonian,
    t: float,
    M: int,
    D_max: int | None = None,
    tol: float = DEFAULT_TOL,
    mode: str = "real",
    callback: Callable[[int, MpsState, float], None] | None = None,
) -> tuple[MpsState, float]:
    """Evolve with ``M`` first-order Trotter steps of size ``t / M``.

    Every bond touched by a gate is re-truncated to ``D_max`` (``None`` means
    no cap) with the canonical center on the active bond.  Imaginary mode
    renormalizes after every layer.  ``callback(step, state, cumulative)``
    runs after each step.  Returns the evolved state and the summed relative
    discarded weights.
    """
    if state.boundary != "open":
        raise ValueError("evolution supports open boundary only")
    if D_max is not None and D_max < 1:
        raise ValueError("D_max must be at least 1")
    if state.N != H.N:
        raise ValueError("state and Hamiltonian have different lengths")
    plan = trotter_plan(H, t, M, mode)
    chain = _Chain(state)

    def renormalize():
        c = chain.center_norm()
        if c == 0:
            raise FloatingPointError("state vanished during imaginary-time evolution")
        chain.rescale(1.0 / c)

    on_step = None
    if callback is not None:

        def on_step(step, cumulative):
            callback(step, chain.state(), cumulative)

    cumulative = _run_plan(
        chain, plan, D_max, tol, renormalize if mode == "imaginary" else None, on_step
    )
    out = chain.state()
    if mode == "imaginary":
        out = MpsState(out.tensors, scale=1.0, center=out.center)
    return out, cumulative


# --- MPDO ------------------------------------------------------------------


@dataclass(frozen=True)
class MpdoState:
    """``rho = exp(log_scale) * sum tr[A_{i1 j1} ... A_{iN jN}] |i><j|``.

    Site tensors have index order ``(left bond, ket, bra, right bond)``.
    """

    tensors: tuple[np.ndarray, ...]
    log_scale: float = 0.0
    boundary: str = "open"

    @property
    def N(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[3] for t in self.tensors[:-1]]

    def _contract(self, ops: Sequence[tuple[int, np.ndarray]] = ()) -> complex:
        """``tr(network * prod ops)`` without the scale factor."""
        by_site = {int(s): np.asarray(o) for s, o in ops}
        env = np.ones((1,), dtype=complex)
        s = 0
        while s < self.N:
            a = self.tensors[s]
            d = a.shape[1]
            op = by_site.get(s)
            if op is None or op.shape == (d, d):
                if op is None:
                    m = np.einsum("akkb->ab", a)
                else:
                    m = np.einsum("aklb,lk->ab", a, op)
                env = env @ m
                s += 1
            else:
                b = self.tensors[s + 1]
                o4 = op.reshape(d, d, d, d)  # [l1, l2, k1, k2]
                m = np.einsum("awxc,cyzb,xzwy->ab", a, b, o4)
                env = env @ m
                s += 2
        return complex(env[0])

    def trace(self) -> complex:
        return math.exp(self.log_scale) * self._contract()

    def expectation(self, ops: Sequence[tuple[int, np.ndarray]]) -> complex:
        """``tr(rho O) / tr(rho)`` for a product of local operators."""
        return self._contract(ops) / self._contract()

    def to_dense(self) -> np.ndarray:
        t = self.tensors[0]
        for a in self.tensors[1:]:
            t = np.tensordot(t, a, axes=(t.ndim - 1, 0))
        t = t[0, ..., 0]
        n = self.N
        d = self.tensors[0].shape[1]
        t = t.transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
        return math.exp(self.log_scale) * t.reshape(d**n, d**n)


def identity_mpdo(N: int, d: int) -> MpdoState:
    eye = np.eye(d, dtype=complex).reshape(1, d, d, 1)
    return MpdoState(tuple(eye.copy() for _ in range(N)))


def _superoperator(gate: np.ndarray, d: int) -> np.ndarray:
    """Two-site map ``rho -> G rho G^dagger`` on per-site index ``(ket, bra)``."""
    g4 = gate.reshape(d, d, d, d)
    gc = gate.conj().reshape(d, d, d, d)
    s = np.einsum("pqrs,tuvw->ptqurvsw", g4, gc)
    return s.reshape(d**4, d**4)


def thermal_mpdo(
    H: NnHamiltonian,
    beta: float,
    M: int,
    D_max: int | None = None,
    tol: float = DEFAULT_TOL,
) -> MpdoState:
    """Unnormalized ``exp(-beta H)`` as an MPDO.

    Writes ``exp(-beta H) = U 1 U^dagger`` with ``U`` the ``M``-step Trotter
    product for ``exp(-beta H / 2)`` and applies each gate to both the ket and
    the bra side of the identity MPDO.  Truncation acts on the combined
    ``(ket, bra)`` index; positivity is not enforced afterwards.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    d = H.d
    if beta == 0:
        return identity_mpdo(H.N, d)
    plan = trotter_plan(H, beta / 2, M, "imaginary")
    layers = tuple(tuple((b, _superoperator(g, d)) for b, g in layer) for layer in plan.layers)
    plan = TrotterPlan(plan.tau, plan.steps, layers, plan.mode)
    vec = MpsState(tuple(t.reshape(1, d * d, 1) for t in identity_mpdo(H.N, d).tensors))
    chain = _Chain(vec)
    log_scale = [0.0]

    def renormalize():
        c = chain.center_norm()
        chain.rescale(1.0 / c)
        log_scale[0] += math.log(c)

    _run_plan(chain, plan, D_max, tol, renormalize)
    tensors = tuple(t.reshape(t.shape[0], d, d, t.shape[2]) for t in chain.tensors)
    return MpdoState(tensors, log_scale=log_scale[0])
