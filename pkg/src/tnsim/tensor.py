"""Dense complex tensor algebra.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128`` in
C (row-major, last index fastest) order.  Every operation here documents
the index order of its result.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from os import PathLike
from typing import BinaryIO, Iterable, Sequence

import numpy as np
import scipy.linalg

DTYPE = np.complex128
TNS_MAGIC = b"TNS1"


def as_tensor(a) -> np.ndarray:
    """Return ``a`` as a C-contiguous complex128 array."""
    return np.ascontiguousarray(a, dtype=DTYPE)


def contract(a: np.ndarray, b: np.ndarray, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Sum over paired indices of ``a`` and ``b``.

    The result carries the unpaired indices of ``a`` in their original order,
    followed by the unpaired indices of ``b``.

    Raises:
        ValueError: if a paired dimension does not match, an index is out of
            range, or an index appears in more than one pair.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    pairs = [(int(i), int(j)) for i, j in pairs]
    ia = [p[0] for p in pairs]
    ib = [p[1] for p in pairs]
    if len(set(ia)) != len(ia) or len(set(ib)) != len(ib):
        raise ValueError(f"duplicate index in contraction pairs {pairs}")
    for i, j in pairs:
        if not (0 <= i < a.ndim and 0 <= j < b.ndim):
            raise ValueError(f"pair ({i}, {j}) out of range for ranks {a.ndim}, {b.ndim}")
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"dimension mismatch on pair ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(ia, ib))


def permute(a: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder indices: index ``k`` of the result is index ``order[k]`` of ``a``."""
    a = as_tensor(a)
    order = [int(o) for o in order]
    if sorted(order) != list(range(a.ndim)):
        raise ValueError(f"{order} is not a permutation of 0..{a.ndim - 1}")
    return np.ascontiguousarray(a.transpose(order))


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition of a tensor split in two groups.

    ``left`` has shape ``(*left_dims, r)``, ``right`` has shape
    ``(r, *right_dims)`` and ``singular_values`` has length ``r``.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> np.ndarray:
        r = self.rank
        lm = self.left.reshape(-1, r)
        rm = self.right.reshape(r, -1)
        return (lm * self.singular_values) @ rm


def _svd(m: np.ndarray):
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def truncation_rank(s: np.ndarray, max_rank: int | None, tol: float) -> int:
    """Number of singular values kept from a descending array ``s``.

    Values with ``s >= tol * s[0]`` survive, capped at ``max_rank``; at least
    one value is always kept.  On a degenerate boundary the cut falls by
    position, so which member of a degenerate multiplet survives depends on
    the basis returned by LAPACK.
    """
    if s.size == 0:
        return 0
    keep = s.size
    if tol > 0 and s[0] > 0:
        keep = int(np.count_nonzero(s >= tol * s[0]))
    if max_rank is not None:
        keep = min(keep, int(max_rank))
    return max(keep, 1)


def svd_matrix(
    m: np.ndarray, max_rank: int | None = None, tol: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Truncated SVD of a matrix: ``(u, s, vh, discarded_weight)``."""
    u, s, vh = _svd(m)
    keep = truncation_rank(s, max_rank, tol)
    discarded = float(np.sum(s[keep:] ** 2))
    return u[:, :keep], s[:keep], vh[:keep, :], discarded


def svd_split(
    a: np.ndarray,
    left_indices: Sequence[int],
    max_rank: int | None = None,
    tol: float = 0.0,
) -> SvdResult:
    """Split ``a`` by an SVD across the bipartition ``left_indices | rest``.

    ``left`` carries the left indices in the order given, then the new bond.
    ``right`` carries the new bond, then the remaining indices of ``a`` in
    their original order.  ``tol`` is relative to the largest singular value;
    ``tol=0`` disables tolerance truncation.
    """
    a = as_tensor(a)
    left_indices = [int(i) for i in left_indices]
    if len(set(left_indices)) != len(left_indices) or any(
        not 0 <= i < a.ndim for i in left_indices
    ):
        raise ValueError(f"invalid left index set {left_indices} for rank {a.ndim}")
    if not 0 < len(left_indices) < a.ndim:
        raise ValueError("left_indices must be a nonempty proper subset of the indices")
    if max_rank is not None and max_rank < 1:
        raise ValueError("max_rank must be positive")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    right_indices = [i for i in range(a.ndim) if i not in left_indices]
    left_dims = [a.shape[i] for i in left_indices]
    right_dims = [a.shape[i] for i in right_indices]
    m = a.transpose(left_indices + right_indices).reshape(
        int(np.prod(left_dims)), int(np.prod(right_dims))
    )
    u, s, vh, discarded = svd_matrix(m, max_rank, tol)
    r = len(s)
    return SvdResult(
        left=np.ascontiguousarray(u.reshape(*left_dims, r)),
        singular_values=s,
        right=np.ascontiguousarray(vh.reshape(r, *right_dims)),
        discarded_weight=discarded,
    )


# --- TNS1 binary format ---------------------------------------------------
#
# "TNS1" | u32 rank | rank * u64 dims | prod(dims) * (f64 re, f64 im), all LE.


def tns_dumps(a: np.ndarray) -> bytes:
    a = as_tensor(a)
    header = TNS_MAGIC + struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return header + a.astype("<c16", copy=False).tobytes(order="C")


def tns_loads(blob: bytes) -> np.ndarray:
    return read_tns(io.BytesIO(blob))


def write_tns(target: str | PathLike | BinaryIO, a: np.ndarray) -> None:
    """Write ``a`` in the TNS1 format to a path or binary file object."""
    blob = tns_dumps(a)
    if hasattr(target, "write"):
        target.write(blob)
    else:
        with open(target, "wb") as fh:
            fh.write(blob)


def read_tns(source: str | PathLike | BinaryIO) -> np.ndarray:
    """Read a TNS1 tensor from a path or binary file object."""
    if not hasattr(source, "read"):
        with open(source, "rb") as fh:
            return read_tns(fh)
    magic = source.read(4)
    if magic != TNS_MAGIC:
        raise ValueError(f"bad TNS1 magic {magic!r}")
    (rank,) = struct.unpack("<I", source.read(4))
    dims = struct.unpack(f"<{rank}Q", source.read(8 * rank)) if rank else ()
    if any(d < 1 for d in dims):
        raise ValueError(f"TNS1 dimensions must be positive, got {dims}")
    count = int(np.prod(dims)) if rank else 1
    payload = source.read(16 * count)
    if len(payload) != 16 * count:
        raise ValueError("truncated TNS1 payload")
    data = np.frombuffer(payload, dtype="<c16").astype(DTYPE)
    return data.reshape(dims)
