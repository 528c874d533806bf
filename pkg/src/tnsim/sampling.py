"""Monte Carlo estimates of local observables from exact MPS samples.

Configurations are drawn site by site from the conditional marginals of
``p(i) = |<i|psi>|^2 / <psi|psi>``.  With the state right-canonical the
right environment of every site is the identity, so each conditional only
needs the running left vector and costs ``O(d D^2)``.

Random numbers: samples are grouped in blocks of ``BLOCK`` consecutive
indices.  Block ``b`` uses ``numpy.random.Generator(Philox(key=seed,
counter=[0, 0, 0, b]))`` and draws one ``(block_size, N)`` array of uniforms,
row ``k`` consumed left to right by sample ``b * BLOCK + k``.  Any partition
of the sample range into whole blocks therefore reproduces the serial draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mps import MpsState, canonicalize

BLOCK = 1024


def block_generator(seed: int, block: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, block]))


def _uniforms(seed: int, start: int, n: int, N: int) -> np.ndarray:
    """Uniforms for samples ``start .. start+n-1``; ``start`` must align to a block."""
    if start % BLOCK:
        raise ValueError("sample ranges must start on a block boundary")
    out = []
    b = start // BLOCK
    remaining = n
    while remaining > 0:
        m = min(BLOCK, remaining)
        out.append(block_generator(seed, b).random((BLOCK, N))[:m])
        remaining -= m
        b += 1
    return np.concatenate(out) if out else np.zeros((0, N))


def _prepared(state: MpsState) -> MpsState:
    if state.boundary != "open":
        raise ValueError("sampling supports open boundary only")
    st = canonicalize(state, 0)
    if st.scale == 0:
        raise ValueError("zero-norm state")
    return st


def _sample(st: MpsState, u: np.ndarray) -> np.ndarray:
    n, N = u.shape
    configs = np.zeros((n, N), dtype=np.int64)
    v = np.ones((n, 1), dtype=complex)
    for s, a in enumerate(st.tensors):
        w = np.einsum("na,aib->nib", v, a)
        p = np.sum(np.abs(w) ** 2, axis=2)
        p = p / p.sum(axis=1, keepdims=True)
        cdf = np.cumsum(p, axis=1)
        idx = np.minimum((cdf < u[:, s : s + 1]).sum(axis=1), a.shape[1] - 1)
        configs[:, s] = idx
        v = w[np.arange(n), idx]
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return configs


def draw_configs(state: MpsState, n: int, seed: int, start: int = 0) -> np.ndarray:
    """``n`` independent configurations (rows) drawn exactly from ``p(i)``.

    ``start`` selects the first sample index so blocks can be drawn in
    separate calls; it must be a multiple of ``BLOCK``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    st = _prepared(state)
    return _sample(st, _uniforms(seed, start, n, st.N))


def _amplitude_rows(st: MpsState, configs: np.ndarray, site: int) -> np.ndarray:
    """``<i with site replaced by j | psi>`` for each row and every ``j``."""
    n = configs.shape[0]
    left = np.ones((n, 1), dtype=complex)
    for s in range(site):
        left = np.einsum("na,nab->nb", left, st.tensors[s][:, configs[:, s], :].transpose(1, 0, 2))
    right = np.ones((n, 1), dtype=complex)
    for s in range(st.N - 1, site, -1):
        right = np.einsum("nab,nb->na", st.tensors[s][:, configs[:, s], :].transpose(1, 0, 2), right)
    return np.einsum("na,ajb,nb->nj", left, st.tensors[site], right)


@dataclass
class SampleReport:
    estimate: float
    std_error: float
    n_samples: int
    seed: int
    raw_configs: np.ndarray | None = field(default=None, repr=False)
    imag_estimate: float = 0.0
    batch_estimates: list[float] = field(default_factory=list, repr=False)


def estimate_local(
    state: MpsState,
    operator: np.ndarray,
    site: int,
    n: int,
    seed: int,
    keep_configs: bool = False,
) -> SampleReport:
    """Average of the local estimator ``<i|O|psi> / <i|psi>`` over exact samples.

    ``std_error`` is the sample standard deviation of the real part over
    ``sqrt(n)``.  ``batch_estimates`` holds the mean of each block.
    """
    st = _prepared(state)
    if not 0 <= site < st.N:
        raise ValueError(f"site {site} out of range")
    op = np.asarray(operator, dtype=complex)
    d = st.phys_dims[site]
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match physical dimension {d}")
    configs = draw_configs(st, n, seed)
    amps = _amplitude_rows(st, configs, site)
    own = amps[np.arange(n), configs[:, site]]
    local = np.einsum("nj,nj->n", op[configs[:, site], :], amps) / own
    re = local.real
    std = float(np.std(re, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    batches = [float(re[k : k + BLOCK].mean()) for k in range(0, n, BLOCK)]
    return SampleReport(
        estimate=float(re.mean()),
        std_error=std,
        n_samples=n,
        seed=seed,
        raw_configs=configs if keep_configs else None,
        imag_estimate=float(local.imag.mean()),
        batch_estimates=batches,
    )
