"""Tensor-network simulation of quantum lattice models.

Submodules: ``tensor`` (contraction, SVD, TNS1 files), ``mps``,
``transfer``, ``hamiltonian``, ``dmrg``, ``tebd``, ``parent``, ``peps``,
``sampling``, ``clock`` and ``cli``.
"""

from .clock import Circuit, ClockInstance, history_state
from .clock import compile as compile_circuit
from .dmrg import DmrgOptions, DmrgReport, run_dmrg
from .hamiltonian import (
    EdResult,
    NnHamiltonian,
    energy,
    exact_diagonalize,
    model,
    model_from_json,
    model_to_json,
)
from .mps import (
    MpsState,
    block_entropy,
    canonicalize,
    compress,
    load_mpsz,
    named_state,
    normalize,
    product_state,
    random_mps,
    save_mpsz,
    to_dense,
)
from .parent import ParentHam, injectivity_check, parent_hamiltonian, reduced_density
from .peps import (
    BoundaryPlan,
    PepsState,
    boundary_contract,
    exact_contract,
    ising_peps,
    local_expectation,
)
from .sampling import SampleReport, draw_configs, estimate_local
from .tebd import MpdoState, evolve, thermal_mpdo
from .transfer import correlation_length, correlator, expectation, transfer_op

__version__ = "0.1.0"
