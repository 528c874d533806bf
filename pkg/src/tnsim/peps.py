"""PEPS on open square lattices: construction, exact and boundary-MPS contraction.

Site tensors have index order ``(physical, left, up, right, down)``; bonds
that face the lattice edge have dimension one.  Contractions act on the
double-layer network ``<Psi| prod O |Psi>`` whose site tensors
``E[(l l'), (u u'), (r r'), (d d')]`` merge ket and bra bonds.
"""

from __future__ import annotations

import json
import math
import os
import zipfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mps import MpsState, canonicalize, compress
from .tensor import tns_dumps, tns_loads

EXACT_MAX_SITES = 16
EXACT_MAX_BOND = 3
DIRECTIONS = ("left_to_right", "top_to_bottom")

Insertion = tuple[int, int, np.ndarray]


@dataclass(frozen=True)
class PepsState:
    """An ``R x C`` grid of site tensors ``A[i, l, u, r, d]``."""

    grid: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        grid = tuple(tuple(np.asarray(t, dtype=complex) for t in row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        R, C = len(grid), len(grid[0]) if grid else 0
        if R == 0 or C == 0 or any(len(row) != C for row in grid):
            raise ValueError("grid must be a non-empty rectangle")
        d = grid[0][0].shape[0]
        for r in range(R):
            for c in range(C):
                t = grid[r][c]
                if t.ndim != 5:
                    raise ValueError(f"site ({r},{c}) tensor must have 5 indices")
                if t.shape[0] != d:
                    raise ValueError("all sites must share the physical dimension")
                _, l, u, rr, dd = t.shape
                if (c == 0 and l != 1) or (c == C - 1 and rr != 1):
                    raise ValueError(f"site ({r},{c}) has an edge bond of dimension > 1")
                if (r == 0 and u != 1) or (r == R - 1 and dd != 1):
                    raise ValueError(f"site ({r},{c}) has an edge bond of dimension > 1")
                if c + 1 < C and rr != grid[r][c + 1].shape[1]:
                    raise ValueError(f"horizontal bond mismatch right of ({r},{c})")
                if r + 1 < R and dd != grid[r + 1][c].shape[2]:
                    raise ValueError(f"vertical bond mismatch below ({r},{c})")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.grid), len(self.grid[0])

    @property
    def phys_dim(self) -> int:
        return self.grid[0][0].shape[0]

    @property
    def max_bond(self) -> int:
        return max(max(t.shape[1:]) for row in self.grid for t in row)

    def transpose(self) -> PepsState:
        """Mirror across the diagonal: rows become columns."""
        R, C = self.shape
        return PepsState(
            tuple(
                tuple(self.grid[r][c].transpose(0, 2, 1, 4, 3) for r in range(R))
                for c in range(C)
            )
        )

    def to_dense(self) -> np.ndarray:
        """State vector over sites in row-major order (small lattices only)."""
        R, C = self.shape
        if R * C > EXACT_MAX_SITES:
            raise ValueError("dense assembly limited to 16 sites")
        psi = np.ones((), dtype=complex)
        labels: list = []
        for r in range(R):
            for c in range(C):
                t = self.grid[r][c]
                legs = [("p", r, c), ("h", r, c - 1), ("v", r - 1, c), ("h", r, c), ("v", r, c)]
                # edge legs have dimension one: drop them
                keep = [0] + [k for k in range(1, 5) if self._internal(legs[k])]
                idx = tuple(slice(None) if k in keep else 0 for k in range(5))
                t = t[idx]
                legs = [legs[k] for k in keep]
                shared = [x for x in legs if x in labels]
                psi = np.tensordot(
                    psi, t, axes=([labels.index(x) for x in shared], [legs.index(x) for x in shared])
                )
                labels = [x for x in labels if x not in shared] + [x for x in legs if x not in shared]
        return psi.reshape(-1) if not labels else psi.transpose(
            [labels.index(("p", r, c)) for r in range(R) for c in range(C)]
        ).reshape(-1)

    def _internal(self, leg) -> bool:
        kind, r, c = leg
        R, C = self.shape
        if kind == "h":
            return 0 <= c < C - 1
        return 0 <= r < R - 1


def product_peps(local_states: Sequence[Sequence[Sequence[complex]]]) -> PepsState:
    """D = 1 PEPS from an ``R x C`` table of local vectors."""
    return PepsState(
        tuple(
            tuple(np.asarray(v, dtype=complex).reshape(-1, 1, 1, 1, 1) for v in row)
            for row in local_states
        )
    )


def random_peps(R: int, C: int, D: int, d: int = 2, seed: int = 0, real: bool = False) -> PepsState:
    """Gaussian random PEPS with every internal bond of dimension ``D``."""
    rng = np.random.default_rng(seed)
    grid = []
    for r in range(R):
        row = []
        for c in range(C):
            shape = (
                d,
                1 if c == 0 else D,
                1 if r == 0 else D,
                1 if c == C - 1 else D,
                1 if r == R - 1 else D,
            )
            t = rng.standard_normal(shape)
            if not real:
                t = t + 1j * rng.standard_normal(shape)
            row.append(t)
        grid.append(tuple(row))
    return PepsState(tuple(grid))


def ising_vectors(beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors with ``<a|b> = exp(-beta)``."""
    q = math.exp(-beta)
    return np.array([1.0, 0.0]), np.array([q, math.sqrt(max(0.0, 1.0 - q * q))])


def ising_peps(beta: float, R: int, C: int) -> PepsState:
    """``P = |0><a,a,a,a| + |1><b,b,b,b|`` on every site of an open lattice.

    Contracting two neighbours gives ``<a|a> = <b|b> = 1`` and ``<a|b> =
    exp(-beta)``, so ``|<s|Psi>|^2`` is proportional to ``exp(-beta H(s))``
    with ``H = -sum_<ij> z_i z_j`` on the open lattice.  Edge-facing legs are
    dropped (dimension one, weight one) so the boundary carries no field.
    """
    if beta < 0 or not math.isfinite(beta):
        raise ValueError("beta must be finite and non-negative")
    vecs = ising_vectors(beta)
    grid = []
    for r in range(R):
        row = []
        for c in range(C):
            legs = [c > 0, r > 0, c < C - 1, r < R - 1]
            shape = (2,) + tuple(2 if x else 1 for x in legs)
            t = np.zeros(shape)
            for s, v in enumerate(vecs):
                block = np.array(1.0)
                for x in legs:
                    block = np.multiply.outer(block, v if x else np.ones(1))
                t[s] = block
            row.append(t)
        grid.append(tuple(row))
    return PepsState(tuple(grid))


# --- contraction ------------------------------------------------------------


def double_layer(a: np.ndarray, op: np.ndarray | None = None) -> np.ndarray:
    """``E = sum_ij <j|O|i> A_i (x) conj(A_j)`` with merged bonds ``(l, u, r, d)``."""
    d = a.shape[0]
    if op is None:
        op = np.eye(d)
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match physical dimension {d}")
    e = np.einsum("ji,iabcd,jefgh->aebfcgdh", op, a, a.conj(), optimize=True)
    _, l, u, r, dd = a.shape
    return e.reshape(l * l, u * u, r * r, dd * dd)


def _layers(peps: PepsState, insertions: Sequence[Insertion]) -> list[list[np.ndarray]]:
    R, C = peps.shape
    ops: dict[tuple[int, int], np.ndarray] = {}
    for r, c, op in insertions:
        if not (0 <= r < R and 0 <= c < C):
            raise ValueError(f"insertion site ({r},{c}) outside the lattice")
        op = np.asarray(op, dtype=complex)
        ops[(r, c)] = ops[(r, c)] @ op if (r, c) in ops else op
    return [[double_layer(peps.grid[r][c], ops.get((r, c))) for c in range(C)] for r in range(R)]


def exact_contract(peps: PepsState, insertions: Sequence[Insertion] = ()) -> complex:
    """``<Psi| prod O |Psi>`` by column absorption into a dense boundary vector.

    No truncation; limited to ``R * C <= 16`` and ``D <= 3``.
    """
    R, C = peps.shape
    if R * C > EXACT_MAX_SITES or peps.max_bond > EXACT_MAX_BOND:
        raise ValueError("exact contraction limited to 16 sites with D <= 3")
    if R > C:
        peps = peps.transpose()
        insertions = [(c, r, op) for r, c, op in insertions]
        R, C = C, R
    layers = _layers(peps, insertions)
    v = np.ones((1,) * R, dtype=complex)  # right bonds of the absorbed columns
    for c in range(C):
        v = v[..., None]  # carry: vertical bond entering the next row
        for r in range(R):
            e = layers[r][c]
            v = np.tensordot(v, e, axes=([r, v.ndim - 1], [0, 1]))  # append r_new, d
            v = np.moveaxis(v, v.ndim - 2, r)
        v = v[..., 0]
    return complex(v.reshape(-1)[0])


@dataclass(frozen=True)
class BoundaryPlan:
    chi: int
    sweep_direction: str = "left_to_right"
    truncation_tol: float = 0.0

    def __post_init__(self):
        if self.chi < 1:
            raise ValueError("chi must be at least 1")
        if self.sweep_direction not in DIRECTIONS:
            raise ValueError(f"sweep_direction must be one of {DIRECTIONS}")
        if self.truncation_tol < 0:
            raise ValueError("truncation_tol must be non-negative")


def default_plan(peps: PepsState) -> BoundaryPlan:
    return BoundaryPlan(chi=4 * peps.max_bond**2)


def boundary_contract(
    peps: PepsState, plan: BoundaryPlan, insertions: Sequence[Insertion] = ()
) -> tuple[complex, float]:
    """Approximate ``<Psi| prod O |Psi>`` with a boundary MPS of bond cap ``chi``.

    The first column of double-layer tensors is an MPS along the rows whose
    physical legs are the outgoing horizontal bonds.  Each further column is
    absorbed as an MPO and the result recompressed to ``chi`` by SVD sweeps.
    Norms are tracked separately in log form so deep lattices do not
    overflow.  Returns the value and the summed relative discarded weights.
    """
    if plan.sweep_direction == "top_to_bottom":
        peps = peps.transpose()
        insertions = [(c, r, op) for r, c, op in insertions]
    R, C = peps.shape
    layers = _layers(peps, insertions)
    # boundary site tensor: (up, right-phys, down)
    tensors = [layers[r][0][0] for r in range(R)]
    log_scale = 0.0
    cumulative = 0.0
    state = MpsState(tuple(tensors))
    for c in range(1, C):
        new = []
        for r in range(R):
            m, e = state.tensors[r], layers[r][c]
            t = np.tensordot(m, e, axes=(1, 0))  # [u, d, u', r', d']
            t = t.transpose(0, 2, 3, 1, 4)
            new.append(t.reshape(t.shape[0] * t.shape[1], t.shape[2], t.shape[3] * t.shape[4]))
        state, log_scale, cumulative = _recompress(
            MpsState(tuple(new), scale=state.scale), plan, log_scale, cumulative
        )
        if state is None:
            return 0j, cumulative
    env = np.ones((1,), dtype=complex)
    for t in state.tensors:
        env = env @ t[:, 0, :]
    value = complex(env[0]) * state.scale
    return value * math.exp(log_scale), cumulative


def _recompress(state: MpsState, plan: BoundaryPlan, log_scale: float, cumulative: float):
    """Compress to ``chi``, moving the norm into ``log_scale`` and keeping the phase."""
    nrm = canonicalize(state, state.N - 1).scale
    if nrm == 0:
        return None, log_scale, cumulative
    out, err = compress(state, plan.chi, plan.truncation_tol)
    out = MpsState(out.tensors, scale=nrm / abs(nrm), center=out.center)
    return out, log_scale + math.log(abs(nrm)), cumulative + err


@dataclass(frozen=True)
class ExpectationReport:
    value: float
    imag_residue: float
    truncation: float


def expectation_report(
    peps: PepsState, insertions: Sequence[Insertion], plan: BoundaryPlan | None = None
) -> ExpectationReport:
    """``<Psi| prod O |Psi> / <Psi|Psi>`` for one or more single-site insertions."""
    plan = default_plan(peps) if plan is None else plan
    num, t1 = boundary_contract(peps, plan, insertions)
    den, t2 = boundary_contract(peps, plan, ())
    if den == 0:
        raise ValueError("zero-norm PEPS")
    ratio = num / den
    return ExpectationReport(float(ratio.real), abs(ratio.imag), t1 + t2)


def local_expectation(
    peps: PepsState, site: tuple[int, int], operator: np.ndarray, plan: BoundaryPlan | None = None
) -> float:
    op = np.asarray(operator, dtype=complex)
    if not np.allclose(op, op.conj().T, atol=1e-12):
        raise ValueError("operator must be Hermitian")
    return expectation_report(peps, [(site[0], site[1], op)], plan).value


def two_site_expectation(
    peps: PepsState,
    site1: tuple[int, int],
    op1: np.ndarray,
    site2: tuple[int, int],
    op2: np.ndarray,
    plan: BoundaryPlan | None = None,
) -> float:
    return expectation_report(peps, [(*site1, op1), (*site2, op2)], plan).value


# --- .pepsz container -------------------------------------------------------


def save_pepsz(peps: PepsState, path: str | os.PathLike) -> None:
    """Zip of a JSON manifest plus one TNS1 blob per site in row-major order."""
    R, C = peps.shape
    names = [f"site_{r:03d}_{c:03d}.tns" for r in range(R) for c in range(C)]
    manifest = {"format": "pepsz", "version": 1, "R": R, "C": C, "d": peps.phys_dim, "sites": names}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, indent=2))
        for name, t in zip(names, (t for row in peps.grid for t in row)):
            zf.writestr(name, tns_dumps(t))


def load_pepsz(path: str | os.PathLike) -> PepsState:
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format") != "pepsz":
            raise ValueError(f"{path}: not a pepsz container")
        blobs = [tns_loads(zf.read(n)) for n in manifest["sites"]]
    R, C = manifest["R"], manifest["C"]
    if len(blobs) != R * C:
        raise ValueError(f"{path}: expected {R * C} sites, found {len(blobs)}")
    peps = PepsState(tuple(tuple(blobs[r * C : (r + 1) * C]) for r in range(R)))
    if peps.phys_dim != manifest["d"]:
        raise ValueError(f"{path}: physical dimension does not match manifest")
    return peps
