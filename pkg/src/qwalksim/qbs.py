"""Quantum binary search over a sorted QRAM window, plus the classical
reference search.

The quantum loop runs a fixed log2(s)+1 cycles so every branch follows
the same control flow; a per-branch flag masks the work of branches
that already found their target. At the end of each cycle the four
cycle-local ancillae are pushed onto the garbage stack, and a mirrored
reverse pass (everything except the output XOR) pops and uncomputes
them, so the call leaves no garbage: only the output register changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import semiquantum as sq
from .errors import SimulationError
from .semiquantum import QramImage
from .state import BOOLEAN, Register, SparseState, U64


@dataclass(frozen=True)
class QbsContext:
    """Window geometry and register roles for one search.

    ``offset_reg`` holds the absolute address of the window's first
    word (per branch), ``target_reg`` the value to look up, and
    ``output_reg`` receives the found index by XOR. With
    ``absolute_output`` the XORed index is the absolute word address
    instead of the window-relative position.
    """

    offset_reg: Register
    target_reg: Register
    output_reg: Register
    s: int
    absolute_output: bool = False

    def __post_init__(self):
        if self.s < 1 or self.s & (self.s - 1):
            raise SimulationError(f"window size must be a power of two, got {self.s}")

    @property
    def cycles(self) -> int:
        return int(math.log2(self.s)) + 1


def classical_binary_search(values, target) -> tuple[int, bool]:
    """Position of ``target`` in a strictly increasing list.

    For-loop form with a fixed ceil(log2(s))+1 cycle count (mirroring
    the quantum circuit): (i, True) if values[i] == target, else
    (0, False). Midpoints are floor((left+right)/2) on the half-open
    window [left, right).
    """
    s = len(values)
    cycles = (int(math.ceil(math.log2(s))) if s > 1 else 0) + 1
    left, right = 0, s
    pos, found = 0, False
    for _ in range(cycles):
        if found:
            continue
        mid = (left + right) // 2
        mid_val = values[mid]
        if mid_val == target:
            pos, found = mid, True
        elif mid_val < target:
            left = mid
        else:
            right = mid
    return pos, found


def qbs(state: SparseState, image: QramImage, ctx: QbsContext, debug_check_sorted: bool = False) -> None:
    """output ^= index of target within the sorted window, 0 if absent.

    Semi-quantum: never changes the branch count. Zero-garbage: every
    ancilla allocated here is returned to |0> by the reverse pass and
    freed, and the garbage stack returns to its entry depth.
    """
    if debug_check_sorted:
        _check_windows_sorted(state, image, ctx)
    s = ctx.s
    lr_width = s.bit_length()  # holds values up to s itself
    left = state.alloc_register(lr_width, name="qbs.left")
    right = state.alloc_register(lr_width, name="qbs.right")
    mid = state.alloc_register(lr_width, name="qbs.mid")
    mid_val = state.alloc_register(ctx.target_reg.width, name="qbs.midVal")
    flag = state.alloc_register(1, BOOLEAN, name="qbs.flag")
    less = state.alloc_register(1, BOOLEAN, name="qbs.less")
    equal = state.alloc_register(1, BOOLEAN, name="qbs.equal")
    addr = state.alloc_register(ctx.offset_reg.width, name="qbs.addr")
    regs = (left, right, mid, mid_val, flag, less, equal, addr)

    sq.xor_const(state, right, s)
    sq.xor_const(state, flag, 1)
    for _ in range(ctx.cycles):
        _cycle(state, image, ctx, regs, forward=True)
        for r in (mid, mid_val, less, equal):
            state.push_garbage(r)
    for _ in range(ctx.cycles):
        for r in (equal, less, mid_val, mid):
            state.pop_garbage(r)
        _cycle(state, image, ctx, regs, forward=False)
    sq.xor_const(state, flag, 1)
    sq.xor_const(state, right, s)

    for r in regs:
        state.free_register(r)


def _cycle(state, image, ctx, regs, forward: bool) -> None:
    """One loop body; ``forward=False`` runs its inverse without the
    output XOR."""
    left, right, mid, mid_val, flag, less, equal, addr = regs
    live = ((flag, 1),)
    found = ((equal, 1),)
    halve = ((flag, 1), (less, 1))

    def mid_assign():
        sq.xor_out_of_place(state, lambda l, r: (l + r) >> U64(1), (left, right), mid, live)

    def addr_xor():
        sq.xor_out_of_place(state, lambda o, m: o + m, (ctx.offset_reg, mid), addr, live)

    def query():
        sq.qram_query(state, image, addr, mid_val, live)

    def emit():
        if ctx.absolute_output:
            sq.xor_out_of_place(state, lambda o, m: o + m, (ctx.offset_reg, mid), ctx.output_reg, found)
        else:
            sq.xor_out_of_place(state, lambda m: m, (mid,), ctx.output_reg, found)

    # Forward body: probe the midpoint, compare, emit the found index,
    # terminate found branches, then narrow the window (midVal below
    # target keeps the upper half, otherwise the lower half). The
    # reverse body is the exact mirror minus the emit.
    if forward:
        mid_assign()
        addr_xor()
        query()
        addr_xor()
        sq.compare_less(state, mid_val, ctx.target_reg, less, live)
        sq.compare_equal(state, mid_val, ctx.target_reg, equal, live)
        emit()
        sq.xor_const(state, flag, 1, found)
        sq.swap_registers(state, mid, left, halve)
        sq.xor_const(state, less, 1, live)
        sq.swap_registers(state, mid, right, halve)
    else:
        sq.swap_registers(state, mid, right, halve)
        sq.xor_const(state, less, 1, live)
        sq.swap_registers(state, mid, left, halve)
        sq.xor_const(state, flag, 1, found)
        sq.compare_equal(state, mid_val, ctx.target_reg, equal, live)
        sq.compare_less(state, mid_val, ctx.target_reg, less, live)
        addr_xor()
        query()
        addr_xor()
        mid_assign()


def _check_windows_sorted(state, image, ctx) -> None:
    offsets = np.unique(state.row(ctx.offset_reg))
    for off in offsets:
        lo = int(off)
        hi = min(lo + ctx.s, image.words.shape[0])
        window = image.words[lo:hi]
        if np.any(window[1:] <= window[:-1]):
            raise SimulationError(f"window at offset {lo} is not strictly increasing")
