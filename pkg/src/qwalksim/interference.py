"""Operations that create or destroy branches.

Two branches can interfere if and only if they agree on every idle
register, so each operation first sorts branches into coherence
groups, transforms a small dense amplitude block per group (zero-
padding the block where a group has fewer branches than the block
size), and finally drops amplitudes at or below the pruning threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NormError, SimulationError, ValueOverflowError, WidthError
from .state import Register, SparseState, U64

#: Group transforms materialize 2**m amplitudes per group; m is capped
#: so temporary memory stays bounded.
MAX_TRANSFORM_QUBITS = 20


@dataclass(frozen=True)
class BranchGroup:
    """One coherence class: branches equal on all idle registers."""

    idle_key: tuple[int, ...]
    members: np.ndarray  # branch indices, active values ascending


def _group_order(state: SparseState, active_rows: list[int]):
    """Sort branches so coherence groups are contiguous.

    Returns (order, starts) where ``order`` indexes branches grouped by
    idle values with active values ascending inside each group, and
    ``starts`` marks the first position of each group.
    """
    vals = state._values
    m = state.num_branches
    idle_rows = [k for k in range(vals.shape[0]) if k not in active_rows]
    keys = [vals[k] for k in reversed(active_rows)] + [vals[k] for k in reversed(idle_rows)]
    order = np.lexsort(tuple(keys)) if keys else np.arange(m)
    if idle_rows and m > 1:
        idle_sorted = vals[idle_rows][:, order]
        changed = np.any(idle_sorted[:, 1:] != idle_sorted[:, :-1], axis=0)
        starts = np.concatenate([[0], np.nonzero(changed)[0] + 1])
    else:
        starts = np.zeros(1 if m else 0, dtype=np.intp)
    return order, starts, idle_rows


def group_branches(state: SparseState, active_regs) -> list[BranchGroup]:
    """Partition branches into coherence groups for the given active set."""
    state.canonicalize()
    active_rows = [state._rows[r.uid] for r in active_regs]
    order, starts, idle_rows = _group_order(state, active_rows)
    groups = []
    bounds = list(starts) + [state.num_branches]
    for g in range(len(starts)):
        members = order[bounds[g] : bounds[g + 1]]
        key = tuple(int(state._values[k, members[0]]) for k in idle_rows)
        groups.append(BranchGroup(key, members))
    return groups


def _transform_groups(state: SparseState, active: Register, dim: int, block_fn, low_bits: int | None = None) -> None:
    """Apply a dense ``dim x dim`` transform on the active register in
    every coherence group, then prune.

    ``block_fn(dense, rep_cols)`` maps the (groups, dim) amplitude
    block; ``rep_cols`` holds one representative value column per
    group. With ``low_bits`` set, only the low bits of the active
    register are transformed and its high bits join the coherence key
    (they behave like an extra idle register).
    """
    m = state.num_branches
    if m == 0:
        state.note_op()
        return
    vals = state._values
    a_row = state._rows[active.uid]
    full = vals[a_row]
    if low_bits is None:
        act_val, high = full, None
    else:
        act_val = full & U64((1 << low_bits) - 1)
        high = full >> U64(low_bits)
    idle_rows = [k for k in range(vals.shape[0]) if k != a_row]
    keys = [act_val] + [vals[k] for k in reversed(idle_rows)]
    if high is not None:
        keys.append(high)
    order = np.lexsort(tuple(keys))
    vals_sorted = vals[:, order]
    amps_sorted = state._amps[order]
    if m > 1:
        idle_sorted = vals_sorted[idle_rows]
        changed = np.any(idle_sorted[:, 1:] != idle_sorted[:, :-1], axis=0)
        if high is not None:
            hs = high[order]
            changed |= hs[1:] != hs[:-1]
        starts = np.concatenate([[0], np.nonzero(changed)[0] + 1])
    else:
        starts = np.zeros(1, dtype=np.intp)
    n_groups = starts.shape[0]
    gid = np.zeros(m, dtype=np.intp)
    gid[starts] = 1
    gid = np.cumsum(gid) - 1
    act = act_val[order].astype(np.intp)
    if np.any(act >= dim):
        raise ValueOverflowError(
            f"value in {active.name} exceeds the {dim}-dimensional transform block"
        )
    dense = np.zeros((n_groups, dim), dtype=np.complex128)
    dense[gid, act] = amps_sorted
    before = float(np.sum(np.abs(amps_sorted) ** 2))
    rep_cols = vals_sorted[:, starts]
    dense = block_fn(dense, rep_cols)
    after = float(np.sum(np.abs(dense) ** 2))
    if abs(after - before) > 1e-9 * max(1.0, before):
        raise NormError(f"group transform changed the norm by {after - before:.3e}")
    keep_g, keep_y = np.nonzero(np.abs(dense) > state.prune_tol)
    new_values = rep_cols[:, keep_g].copy()
    new_act = keep_y.astype(U64)
    if high is not None:
        new_act |= (rep_cols[a_row, keep_g] >> U64(low_bits)) << U64(low_bits)
    new_values[a_row] = new_act
    state.replace_branches(new_values, dense[keep_g, keep_y])
    state.note_op()


def _fwht(block: np.ndarray) -> np.ndarray:
    """Batched fast Walsh-Hadamard transform along axis 1 (unnormalized)."""
    g, d = block.shape
    h = 1
    while h < d:
        block = block.reshape(g, d // (2 * h), 2, h)
        s0 = block[:, :, 0, :] + block[:, :, 1, :]
        s1 = block[:, :, 0, :] - block[:, :, 1, :]
        block = np.stack((s0, s1), axis=2).reshape(g, d)
        h *= 2
    return block


def hadamard_transform(state: SparseState, reg: Register, m: int, high_bits_idle: bool = False) -> None:
    """m-qubit Hadamard on the low m bits of ``reg``.

    Entry (x, y) of the transform is (-1)**popcount(x & y) / 2**(m/2).
    Requires every branch value in ``reg`` to be below 2**m unless
    ``high_bits_idle`` is set, in which case the high bits are
    spectators and join the coherence key.
    """
    if m < 0 or m > reg.width:
        raise WidthError(f"m={m} outside [0, width of {reg.name}]")
    if m > MAX_TRANSFORM_QUBITS:
        raise WidthError(f"group transforms are capped at {MAX_TRANSFORM_QUBITS} qubits")
    row = state.row(reg)
    if not high_bits_idle:
        high = row >> U64(m) if m else row
        if np.any(high != 0):
            raise ValueOverflowError(f"branch value in {reg.name} not below 2**{m}")
    if m == 0:
        state.note_op()
        return
    scale = 2.0 ** (-m / 2.0)

    def block(dense, _reps):
        return _fwht(dense) * scale

    _transform_groups(state, reg, 1 << m, block, low_bits=m if m < reg.width else None)


def conditional_rotation(
    state: SparseState,
    flag_reg: Register,
    value_reg: Register,
    sign_rule=None,
    adjoint: bool = False,
) -> None:
    """Rotate the 1-qubit flag by an angle read from a fixed-point register.

    With a = the fixed-point value (0 <= a < 1) and sigma from
    ``sign_rule`` (default +1):

        |0> -> sigma*sqrt(a)|0> + sqrt(1-a)|1>
        |1> -> sigma*sqrt(a)|1> - sqrt(1-a)|0>

    The adjoint applies the inverse rotation. All registers other than
    the flag are idle, so a is constant within each coherence group.
    """
    if flag_reg.width != 1:
        raise WidthError("conditional rotation flag must be a 1-qubit register")
    state.require_tag(value_reg, "fixed-point")
    frac = value_reg.tag.frac_bits
    vrow = state._rows[value_reg.uid]
    names = [r.name for r in state.registers]

    def block(dense, reps):
        words = reps[vrow]
        if np.any(words >> U64(frac) != 0):
            raise ValueOverflowError("fixed-point rotation amount must lie in [0, 1)")
        a = words.astype(np.float64) / float(1 << frac)
        root_a = np.sqrt(a)
        root_c = np.sqrt(1.0 - a)
        if sign_rule is None:
            sigma = np.ones(reps.shape[1], dtype=np.complex128)
        else:
            sigma = np.array(
                [
                    sign_rule({n: int(v) for n, v in zip(names, reps[:, g])})
                    for g in range(reps.shape[1])
                ],
                dtype=np.complex128,
            )
        in0, in1 = dense[:, 0], dense[:, 1]
        if not adjoint:
            out0 = sigma * root_a * in0 - root_c * in1
            out1 = root_c * in0 + np.conj(sigma) * root_a * in1
        else:
            out0 = np.conj(sigma) * root_a * in0 + root_c * in1
            out1 = -root_c * in0 + sigma * root_a * in1
        return np.stack([out0, out1], axis=1)

    _transform_groups(state, flag_reg, 2, block)


def prune_zero(state: SparseState, tol: float | None = None) -> None:
    """Remove branches with |amplitude| <= tol."""
    t = state.prune_tol if tol is None else float(tol)
    keep = np.abs(state._amps) > t
    if not np.all(keep):
        state.replace_branches(state._values[:, keep], state._amps[keep])
    state.note_op()
