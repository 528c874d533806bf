"""Dense reference helpers shared by the test modules."""

import numpy as np
import pytest

from tnsim.hamiltonian import embed


def dense_expectation(vec, ops, N, d):
    """<v| prod ops |v> / <v|v> with every operator embedded into the full space."""
    w = vec
    for site, op in reversed(list(ops)):
        width = 1 if op.shape[0] == d else 2
        w = embed(op, [(site + k) % N for k in range(width)], N, d) @ w
    return (vec.conj() @ w) / (vec.conj() @ vec)


def random_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance report ------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
