"""Register-level sparse-state quantum circuit simulator, a quantum
walk on packed sparse matrices, and a Chebyshev (CKS) linear solver."""

from .cks import ChebyshevPlan, SolverRun, accumulate, chebyshev_plan, cks_solve, fidelity, success_rate, tau_step
from .errors import SimulationError
from .interference import BranchGroup, conditional_rotation, group_branches, hadamard_transform, prune_zero
from .matrixgen import BandMatrixSpec, CscMatrixImage, gen_band_matrix, pack_qram, preprocess, quantize
from .qbs import QbsContext, classical_binary_search, qbs
from .semiquantum import (
    QramImage,
    SemiQuantumSpec,
    apply_semi_quantum,
    in_place_via_inverse_pair,
    phase_flip_if_any_nonzero,
    qram_query,
    swap_registers,
    xor_out_of_place,
)
from .state import BOOLEAN, Register, ResourceStats, SIGNED, SparseState, TypeTag, UNSIGNED, fixed_point
from .walk import WalkContext, new_walk_state, oa_prime, os_prime, qubit_estimate, reflection_p, t_tilde, t_tilde_adjoint, walk_w

__version__ = "0.1.0"
