"""Matrix product states.

Site tensors use the index order ``(left bond, physical, right bond)``
throughout the package.  A state is the trace of the matrix product times
a global ``scale``; for open chains the outer bonds have dimension one so
the trace is a single entry.
"""

from __future__ import annotations

import json
import os
import zipfile
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .tensor import DTYPE, as_tensor, svd_matrix, tns_dumps, tns_loads

BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class MpsState:
    """An MPS: ``|psi> = scale * sum_i tr[A_{i1} ... A_{iN}] |i1 ... iN>``.

    Attributes:
        tensors: site tensors, each of shape ``(Dl, d, Dr)``.
        boundary: ``"open"`` or ``"periodic"``.
        scale: global scalar factor kept outside the tensors.
        center: site index of the orthogonality center if the state is in
            mixed canonical form, else ``None``.
    """

    tensors: tuple[np.ndarray, ...]
    boundary: str = "open"
    scale: complex = 1.0
    center: int | None = field(default=None)

    def __post_init__(self):
        tensors = tuple(as_tensor(t) for t in self.tensors)
        object.__setattr__(self, "tensors", tensors)
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if not tensors:
            raise ValueError("an MPS needs at least one site")
        for s, t in enumerate(tensors):
            if t.ndim != 3:
                raise ValueError(f"site {s}: expected a rank-3 tensor, got shape {t.shape}")
        for s in range(len(tensors) - 1):
            if tensors[s].shape[2] != tensors[s + 1].shape[0]:
                raise ValueError(
                    f"bond mismatch between sites {s} and {s + 1}: "
                    f"{tensors[s].shape[2]} != {tensors[s + 1].shape[0]}"
                )
        if self.boundary == "open":
            if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
                raise ValueError("open boundary requires outer bond dimensions of 1")
        elif tensors[0].shape[0] != tensors[-1].shape[2]:
            raise ValueError("periodic boundary requires matching outer bonds")
        if self.center is not None and not 0 <= self.center < len(tensors):
            raise ValueError(f"canonical center {self.center} out of range")

    @property
    def N(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors]

    @property
    def bond_dims(self) -> list[int]:
        """Dimensions of the N-1 internal bonds (plus the closing bond if periodic)."""
        dims = [t.shape[2] for t in self.tensors[:-1]]
        if self.boundary == "periodic":
            dims.append(self.tensors[-1].shape[2])
        return dims

    def with_tensors(self, tensors, scale=None, center=None) -> "MpsState":
        return replace(
            self,
            tensors=tuple(tensors),
            scale=self.scale if scale is None else scale,
            center=center,
        )


# --- construction ----------------------------------------------------------


def product_state(config: Sequence[int], d: int | Sequence[int] = 2) -> MpsState:
    dims = [d] * len(config) if np.isscalar(d) else list(d)
    tensors = []
    for s, (i, ds) in enumerate(zip(config, dims)):
        if not 0 <= i < ds:
            raise ValueError(f"site {s}: label {i} out of range for d={ds}")
        t = np.zeros((1, ds, 1), dtype=DTYPE)
        t[0, i, 0] = 1.0
        tensors.append(t)
    return MpsState(tuple(tensors))


def aklt_tensor() -> np.ndarray:
    """Bulk AKLT tensor ``(2, 3, 2)`` built from a singlet bond and the spin-1 projector.

    Physical basis is ``Sz = +1, 0, -1``; virtual basis is ``up, down``.
    Scaled by ``sqrt(2/3)`` so that ``sum_i A_i A_i^dagger = 1`` and the
    transfer operator has leading eigenvalue one.
    """
    proj = np.zeros((3, 2, 2), dtype=DTYPE)
    proj[0, 0, 0] = 1.0
    proj[1, 0, 1] = proj[1, 1, 0] = 1.0 / np.sqrt(2.0)
    proj[2, 1, 1] = 1.0
    singlet = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=DTYPE)  # |01> - |10>
    # A_i = P_i @ omega: projector's right virtual leg joins the bond to the next site
    a = np.einsum("iag,gb->aib", proj, singlet)
    return np.sqrt(2.0 / 3.0) * a


def ghz_tensor() -> np.ndarray:
    a = np.zeros((2, 2, 2), dtype=DTYPE)
    a[0, 0, 0] = 1.0
    a[1, 1, 1] = 1.0
    return a


def w_tensor() -> np.ndarray:
    a = np.zeros((2, 2, 2), dtype=DTYPE)
    a[:, 0, :] = np.eye(2)
    a[0, 1, 1] = 1.0  # A_1 = |0><1|
    return a


def cluster_tensor() -> np.ndarray:
    """Bond carries the previous spin; each neighbouring pair picks up ``(-1)^(s s')``."""
    a = np.zeros((2, 2, 2), dtype=DTYPE)
    for prev in range(2):
        for s in range(2):
            a[prev, s, s] = (-1.0) ** (prev * s)
    return a


def majumdar_ghosh_tensor() -> np.ndarray:
    """D=3 dimer tensor: virtual 0 = no open singlet, 1/2 = open singlet started by up/down."""
    a = np.zeros((3, 2, 3), dtype=DTYPE)
    a[0, 0, 1] = 1.0  # start singlet with up
    a[0, 1, 2] = 1.0  # start singlet with down
    a[1, 1, 0] = 1.0  # close up-down
    a[2, 0, 0] = -1.0  # close down-up with the singlet sign
    return a


def _uniform_chain(a: np.ndarray, N: int, boundary: str, left=None, right=None) -> MpsState:
    if boundary == "periodic":
        return MpsState(tuple(a.copy() for _ in range(N)), boundary="periodic")
    left = np.asarray(left, dtype=DTYPE)
    right = np.asarray(right, dtype=DTYPE)
    first = np.einsum("a,aib->ib", left, a)[None]
    last = np.einsum("aib,b->ai", a, right)[..., None]
    return MpsState((first,) + tuple(a.copy() for _ in range(N - 2)) + (last,))


def named_state(
    kind: str,
    N: int | None = None,
    boundary: str = "open",
    config: Sequence[int] | None = None,
) -> MpsState:
    """Unnormalized exact MPS for a named state.

    ``kind`` is one of ``ghz``, ``w``, ``aklt``, ``cluster``,
    ``majumdar_ghosh`` or ``product`` (which needs ``config``).  Open AKLT
    chains close both dangling virtual spins with ``(1, 0)``; the open
    Majumdar-Ghosh state is the dimer covering ``(1,2)(3,4)...``.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    if kind == "product":
        if config is None:
            raise ValueError("product state needs a config")
        if boundary != "open":
            raise ValueError("product states are built with open boundary")
        if N is not None and N != len(config):
            raise ValueError("N does not match len(config)")
        return product_state(config)
    if N is None:
        raise ValueError("N is required")
    min_n = 3 if kind in ("w", "majumdar_ghosh") else 2
    if N < min_n:
        raise ValueError(f"{kind} state needs N >= {min_n}")
    if kind == "ghz":
        return _uniform_chain(ghz_tensor(), N, boundary, [1, 1], [1, 1])
    if kind == "w":
        if boundary != "open":
            raise ValueError("the W-state construction is defined for open chains only")
        return _uniform_chain(w_tensor(), N, boundary, [1, 0], [0, 1])
    if kind == "aklt":
        return _uniform_chain(aklt_tensor(), N, boundary, [1, 0], [1, 0])
    if kind == "cluster":
        return _uniform_chain(cluster_tensor(), N, boundary, [1, 0], [1, 1])
    if kind == "majumdar_ghosh":
        if N % 2:
            raise ValueError("Majumdar-Ghosh dimer state needs an even number of sites")
        return _uniform_chain(majumdar_ghosh_tensor(), N, boundary, [1, 0, 0], [1, 0, 0])
    raise ValueError(f"unknown named state {kind!r}")


def random_mps(
    N: int,
    D: int,
    d: int = 2,
    seed: int | None = None,
    boundary: str = "open",
    rng: np.random.Generator | None = None,
    real: bool = False,
) -> MpsState:
    """Random MPS with complex Gaussian entries.

    Open chains cap each bond at ``min(D, d**k, d**(N-k))`` so no bond is
    larger than the Hilbert space it can address.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    if boundary == "open":
        bonds = [1] + [min(D, d**k, d ** (N - k)) for k in range(1, N)] + [1]
    else:
        bonds = [D] * (N + 1)
    tensors = []
    for s in range(N):
        shape = (bonds[s], d, bonds[s + 1])
        t = rng.standard_normal(shape)
        if not real:
            t = t + 1j * rng.standard_normal(shape)
        tensors.append(t / np.sqrt(np.prod(shape[1:])))
    return MpsState(tuple(tensors), boundary=boundary)


# --- evaluation ------------------------------------------------------------


def to_dense(state: MpsState) -> np.ndarray:
    """Full state vector of length ``prod(phys_dims)``, first site most significant."""
    t = state.tensors[0]
    for a in state.tensors[1:]:
        t = np.tensordot(t, a, axes=(t.ndim - 1, 0))
    vec = np.trace(t, axis1=0, axis2=t.ndim - 1)
    return state.scale * vec.reshape(-1)


def amplitude(state: MpsState, config: Sequence[int]) -> complex:
    """Coefficient ``<config|psi>`` as a product of ``D x D`` matrices."""
    if len(config) != state.N:
        raise ValueError(f"config has {len(config)} labels for {state.N} sites")
    m = None
    for s, (a, i) in enumerate(zip(state.tensors, config)):
        if not 0 <= i < a.shape[1]:
            raise ValueError(f"site {s}: label {i} out of range for d={a.shape[1]}")
        m = a[:, i, :] if m is None else m @ a[:, i, :]
    return complex(state.scale * np.trace(m))


def overlap(bra: MpsState, ket: MpsState) -> complex:
    """``<bra|ket>`` by sweeping a doubled environment through the chain."""
    if bra.N != ket.N or bra.phys_dims != ket.phys_dims:
        raise ValueError("states live on different chains")
    a0, b0 = ket.tensors[0], bra.tensors[0]
    # env[x, x', a, a']: x, x' fixed outer bonds of ket/bra, a, a' running bonds
    env = np.einsum("xa,yb->xyab", np.eye(a0.shape[0]), np.eye(b0.shape[0]))
    for a, b in zip(ket.tensors, bra.tensors):
        env = np.einsum("xyab,aic,bid->xycd", env, a, b.conj(), optimize=True)
    val = np.einsum("xyxy->", env)
    return complex(np.conj(bra.scale) * ket.scale * val)


def norm_squared(state: MpsState) -> float:
    return float(overlap(state, state).real)


def norm(state: MpsState) -> float:
    return float(np.sqrt(max(norm_squared(state), 0.0)))


def normalize(state: MpsState) -> MpsState:
    n = norm(state)
    if n == 0:
        raise ValueError("cannot normalize a zero-norm state")
    return replace(state, scale=state.scale / n)


# --- canonical forms -------------------------------------------------------


def _qr_left(a: np.ndarray):
    dl, d, dr = a.shape
    q, r = np.linalg.qr(a.reshape(dl * d, dr))
    return q.reshape(dl, d, q.shape[1]), r


def _qr_right(a: np.ndarray):
    dl, d, dr = a.shape
    q, r = np.linalg.qr(a.reshape(dl, d * dr).conj().T)
    return q.conj().T.reshape(q.shape[1], d, dr), r.conj().T


def _require_open(state: MpsState, what: str):
    if state.boundary != "open":
        raise ValueError(f"{what} is only supported for open boundary")


def canonicalize(state: MpsState, center: int) -> MpsState:
    """Mixed canonical form with orthogonality center ``center``.

    Sites left of the center become left isometries, sites right of it right
    isometries, and the center tensor is scaled to unit Frobenius norm with
    its norm moved into ``scale``.  Bond dimensions never grow.  A state that
    already carries a valid center is only swept between the two centers.
    """
    _require_open(state, "canonical form")
    if not 0 <= center < state.N:
        raise ValueError(f"center {center} out of range")
    tensors = list(state.tensors)
    if state.center is None:
        lo, hi = 0, state.N - 1
    else:
        lo = min(state.center, center)
        hi = max(state.center, center)
    for s in range(lo, center):
        tensors[s], r = _qr_left(tensors[s])
        tensors[s + 1] = np.tensordot(r, tensors[s + 1], axes=(1, 0))
    for s in range(hi, center, -1):
        tensors[s], r = _qr_right(tensors[s])
        tensors[s - 1] = np.tensordot(tensors[s - 1], r, axes=(2, 0))
    c = np.linalg.norm(tensors[center])
    scale = state.scale
    if c > 0:
        tensors[center] = tensors[center] / c
        scale = scale * c
    return state.with_tensors(tensors, scale=scale, center=center)


def is_left_isometry(a: np.ndarray, atol: float = 1e-10) -> bool:
    m = a.reshape(-1, a.shape[2])
    return np.allclose(m.conj().T @ m, np.eye(a.shape[2]), atol=atol)


def is_right_isometry(a: np.ndarray, atol: float = 1e-10) -> bool:
    m = a.reshape(a.shape[0], -1)
    return np.allclose(m @ m.conj().T, np.eye(a.shape[0]), atol=atol)


def compress(state: MpsState, D_max: int, tol: float = 0.0) -> tuple[MpsState, float]:
    """Truncate every bond to at most ``D_max`` Schmidt values.

    The state is left-canonicalized, then swept right to left; each cut is
    truncated with its exact Schmidt spectrum and renormalized, and the
    discarded (normalized) weights are summed into the returned error.  The
    result is normalized with its center on site 0.
    """
    _require_open(state, "compression")
    if D_max < 1:
        raise ValueError("D_max must be at least 1")
    st = canonicalize(state, state.N - 1)
    tensors = list(st.tensors)
    error = 0.0
    for s in range(state.N - 1, 0, -1):
        dl, d, dr = tensors[s].shape
        u, sv, vh, discarded = svd_matrix(tensors[s].reshape(dl, d * dr), D_max, tol)
        total = discarded + float(np.sum(sv**2))
        if total > 0:
            error += discarded / total
            sv = sv / np.sqrt(float(np.sum(sv**2)))
        tensors[s] = vh.reshape(len(sv), d, dr)
        tensors[s - 1] = np.tensordot(tensors[s - 1], u * sv, axes=(2, 0))
    c = np.linalg.norm(tensors[0])
    if c > 0:
        tensors[0] = tensors[0] / c
    return state.with_tensors(tensors, scale=1.0, center=0), error


def schmidt_values(state: MpsState, cut: int) -> np.ndarray:
    """Normalized Schmidt coefficients across the bond left of site ``cut``."""
    _require_open(state, "Schmidt decomposition")
    if not 1 <= cut <= state.N - 1:
        raise ValueError(f"cut must be in 1..{state.N - 1}")
    st = canonicalize(state, cut)
    a = st.tensors[cut]
    s = np.linalg.svd(a.reshape(a.shape[0], -1), compute_uv=False)
    return s / np.linalg.norm(s)


def block_entropy(state: MpsState, cut: int) -> float:
    """Von Neumann entropy (natural log) of the first ``cut`` sites."""
    p = schmidt_values(state, cut) ** 2
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


# --- .mpsz container -------------------------------------------------------

MPSZ_VERSION = 1


def _manifest(state: MpsState) -> dict:
    scale = complex(state.scale)
    return {
        "format": "mpsz",
        "version": MPSZ_VERSION,
        "N": state.N,
        "boundary": state.boundary,
        "phys_dims": state.phys_dims,
        "scale": [scale.real, scale.imag],
        "canonical_center": state.center,
        "sites": [f"site_{s:04d}.tns" for s in range(state.N)],
    }


def save_mpsz(state: MpsState, path: str | os.PathLike, as_directory: bool = False) -> None:
    """Write a JSON manifest plus one TNS1 blob per site (zip or directory)."""
    manifest = _manifest(state)
    if as_directory:
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)
        for name, t in zip(manifest["sites"], state.tensors):
            with open(os.path.join(path, name), "wb") as fh:
                fh.write(tns_dumps(t))
        return
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, indent=2))
        for name, t in zip(manifest["sites"], state.tensors):
            zf.writestr(name, tns_dumps(t))


def load_mpsz(path: str | os.PathLike) -> MpsState:
    if os.path.isdir(path):

        def read(name):
            with open(os.path.join(path, name), "rb") as fh:
                return fh.read()

        manifest = json.loads(read("manifest.json"))
        blobs = [read(n) for n in manifest["sites"]]
    else:
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            blobs = [zf.read(n) for n in manifest["sites"]]
    if manifest.get("format") != "mpsz":
        raise ValueError(f"{path}: not an mpsz container")
    tensors = tuple(tns_loads(b) for b in blobs)
    if len(tensors) != manifest["N"]:
        raise ValueError(f"{path}: manifest lists N={manifest['N']} but has {len(tensors)} sites")
    state = MpsState(
        tensors,
        boundary=manifest["boundary"],
        scale=complex(*manifest["scale"]),
        center=manifest.get("canonical_center"),
    )
    if state.phys_dims != list(manifest["phys_dims"]):
        raise ValueError(f"{path}: phys_dims in manifest do not match site tensors")
    return state
