"""The quantum-walk program on a packed sparse matrix.

Six registers carry the walk: row/column pairs (j_c, j) and (k_c, k)
of n = log2(N)+1 qubits each plus the two 1-qubit flags b1, b2. The
extra high registers j_c, k_c extend the index space so the sparsity
oracle is a bijection on (position, residual) pairs and the walk acts
on the enlarged matrix diag(A, 0), whose upper block is A.

Operators: the element oracle (one QRAM query at a computed address),
the modified sparsity oracle (QRAM, quantum binary search, swap), the
preparation isometry, the reflection about prepared states, and the
walk step W = S.T.P.Tdag whose flag-zero powers generate Chebyshev
polynomials of A/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import semiquantum as sq
from .errors import SimulationError
from .interference import conditional_rotation, hadamard_transform
from .qbs import QbsContext, qbs
from .semiquantum import QramImage
from .state import BOOLEAN, Register, SparseState, U64, UNSIGNED, fixed_point


@dataclass(frozen=True)
class WalkContext:
    """Registers and geometry of one walk instance."""

    jc: Register
    j: Register
    b1: Register
    kc: Register
    k: Register
    b2: Register
    image: QramImage
    n_rows: int
    s: int
    k_w: int
    n: int
    element_offset: int
    sparsity_offset: int

    @property
    def log_s(self) -> int:
        return int(math.log2(self.s))

    @property
    def flag_regs(self) -> tuple[Register, ...]:
        """Registers that are zero on the encoded block: everything
        except the row register j."""
        return (self.b1, self.k, self.b2, self.jc, self.kc)


def new_walk_state(image: QramImage, sidecar: dict, prune_tol: float = 1e-12) -> tuple[SparseState, WalkContext]:
    """Allocate the six walk registers on a fresh state."""
    n = int(sidecar["n"])
    state = SparseState(prune_tol=prune_tol)
    jc = state.alloc_register(n, UNSIGNED, "jc")
    j = state.alloc_register(n, UNSIGNED, "j")
    b1 = state.alloc_register(1, BOOLEAN, "b1")
    kc = state.alloc_register(n, UNSIGNED, "kc")
    k = state.alloc_register(n, UNSIGNED, "k")
    b2 = state.alloc_register(1, BOOLEAN, "b2")
    ctx = WalkContext(
        jc, j, b1, kc, k, b2,
        image=image,
        n_rows=int(sidecar["N"]),
        s=int(sidecar["s"]),
        k_w=int(sidecar["k_w"]),
        n=n,
        element_offset=int(sidecar["elementOffset"]),
        sparsity_offset=int(sidecar["sparsityOffset"]),
    )
    return state, ctx


def load_input(state: SparseState, ctx: WalkContext, vec: np.ndarray) -> None:
    """Classical initialization of |b, 0>: the vector lives in the row
    register, all other registers zero."""
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.shape[0] > (1 << ctx.n):
        raise SimulationError("input vector longer than the row register space")
    nz = np.nonzero(vec)[0]
    state.set_branches({ctx.j: nz.astype(U64)}, vec[nz])


def oa_prime(state: SparseState, ctx: WalkContext, elem: Register) -> None:
    """elem ^= element word at (row j, position k).

    Address = element_offset + j*s + k, computed into a temporary and
    uncomputed after the query. Controlled on j_c = k_c = 0 so the
    enlarged matrix is diag(A, 0).
    """
    controls = ((ctx.jc, 0), (ctx.kc, 0))
    addr = state.alloc_register(ctx.image.address_width, UNSIGNED, "oa.addr")
    s_const = U64(ctx.s)
    base = U64(ctx.element_offset)

    def address(jv, lv):
        return jv * s_const + lv + base

    sq.xor_out_of_place(state, address, (ctx.j, ctx.k), addr, controls)
    sq.qram_query(state, ctx.image, addr, elem, controls)
    sq.xor_out_of_place(state, address, (ctx.j, ctx.k), addr, controls)
    state.free_register(addr)


def os_prime(state: SparseState, ctx: WalkContext, adjoint: bool = False) -> None:
    """Modified sparsity oracle on (j, k, k_c).

    Forward: |j, l, z> -> |j, z^col(j,l), l^idx(z^col(j,l))> via a QRAM
    read of the sparsity segment, a quantum binary search over the
    row's sorted window, and a swap of the two operand registers. A
    bijection on the full (l, z) space for every row, reducing to the
    plain sparsity oracle when z = 0 and l < s.
    """
    offt = state.alloc_register(ctx.image.address_width, UNSIGNED, "os.offset")
    s_const = U64(ctx.s)
    base = U64(ctx.sparsity_offset)
    sq.xor_out_of_place(state, lambda jv: jv * s_const + base, (ctx.j,), offt)

    def read_column():
        addr = state.alloc_register(ctx.image.address_width, UNSIGNED, "os.addr")
        sq.xor_out_of_place(state, lambda o, lv: o + lv, (offt, ctx.k), addr)
        sq.qram_query(state, ctx.image, addr, ctx.kc)
        sq.xor_out_of_place(state, lambda o, lv: o + lv, (offt, ctx.k), addr)
        state.free_register(addr)

    search = QbsContext(offset_reg=offt, target_reg=ctx.kc, output_reg=ctx.k, s=ctx.s)
    if not adjoint:
        read_column()
        qbs(state, ctx.image, search)
        sq.swap_registers(state, ctx.k, ctx.kc)
    else:
        sq.swap_registers(state, ctx.k, ctx.kc)
        qbs(state, ctx.image, search)
        read_column()

    sq.xor_out_of_place(state, lambda jv: jv * s_const + base, (ctx.j,), offt)
    state.free_register(offt)


def t_tilde(state: SparseState, ctx: WalkContext, adjoint: bool = False) -> None:
    """Preparation isometry: |j~> -> (1/sqrt(s)) sum over stored
    positions of sqrt(a)|col, 0> + sqrt(1-a)|col, 1> in (k, b2).

    Hadamard on the position bits of k, element read, position->column
    conversion, flag rotation keyed on the element, then element
    uncompute; the adjoint runs the exact reverse.
    """
    elem = state.alloc_register(ctx.k_w, fixed_point(ctx.k_w), "elem")
    if not adjoint:
        hadamard_transform(state, ctx.k, ctx.log_s, high_bits_idle=True)
        oa_prime(state, ctx, elem)
        os_prime(state, ctx)
        conditional_rotation(state, ctx.b2, elem)
        os_prime(state, ctx, adjoint=True)
        oa_prime(state, ctx, elem)
        os_prime(state, ctx)
    else:
        os_prime(state, ctx, adjoint=True)
        oa_prime(state, ctx, elem)
        os_prime(state, ctx)
        conditional_rotation(state, ctx.b2, elem, adjoint=True)
        os_prime(state, ctx, adjoint=True)
        oa_prime(state, ctx, elem)
        hadamard_transform(state, ctx.k, ctx.log_s, high_bits_idle=True)
    state.free_register(elem)


def t_tilde_adjoint(state: SparseState, ctx: WalkContext) -> None:
    t_tilde(state, ctx, adjoint=True)


def reflection_p(state: SparseState, ctx: WalkContext) -> None:
    """Phase flip on every branch outside the prepared-input subspace
    (any of b1, k, b2, j_c, k_c nonzero)."""
    sq.phase_flip_if_any_nonzero(state, ctx.flag_regs)


def walk_swap(state: SparseState, ctx: WalkContext) -> None:
    """The S operator: j<->k, j_c<->k_c, b1<->b2."""
    sq.swap_registers(state, ctx.j, ctx.k)
    sq.swap_registers(state, ctx.jc, ctx.kc)
    sq.swap_registers(state, ctx.b1, ctx.b2)


def walk_w(state: SparseState, ctx: WalkContext) -> None:
    """One walk step W = S . T . P . Tdag (rightmost first)."""
    depth = state.garbage_depth
    t_tilde(state, ctx, adjoint=True)
    reflection_p(state, ctx)
    t_tilde(state, ctx)
    walk_swap(state, ctx)
    if state.garbage_depth != depth:
        raise SimulationError("garbage stack not restored across a walk step")


def qubit_estimate(n_rows: int, s: int, k_w: int) -> int:
    """Closed-form working-qubit estimate for the walk.

    Counts the six walk registers plus the four per-cycle search
    ancillae over log2(s)+1 cycles:
    (n + k_w + 2) * log2(s) + 5n + k_w + 4 with n = log2(N) + 1.
    """
    n = int(math.log2(n_rows)) + 1
    log_s = int(math.log2(s))
    return (n + k_w + 2) * log_s + 5 * n + k_w + 4


def flag_zero_vector(state: SparseState, ctx: WalkContext) -> np.ndarray:
    """Amplitudes of branches with b1 = k = b2 = j_c = k_c = 0, indexed
    by the row register over [0, 2N)."""
    mask = np.ones(state.num_branches, dtype=bool)
    for r in ctx.flag_regs:
        mask &= state.row(r) == 0
    vec = np.zeros(1 << ctx.n, dtype=np.complex128)
    vec[state.row(ctx.j)[mask].astype(np.intp)] = state._amps[mask]
    return vec


def flag_zero_mass(state: SparseState, ctx: WalkContext) -> float:
    mask = np.ones(state.num_branches, dtype=bool)
    for r in ctx.flag_regs:
        mask &= state.row(r) == 0
    return float(np.sum(np.abs(state._amps[mask]) ** 2))
