"""Sparse-state representation of a multi-register quantum system.

A state is a table of branches. Each branch is one nonzero
computational-basis component: one unsigned word per register plus a
complex double-precision amplitude. Registers are rows of the value
array and branches are columns, so the memory footprint is
(register count) x (branch count) words plus one amplitude vector --
independent of the total qubit count.

Register values are stored in fixed 64-bit words regardless of the
declared width; widths above 64 are rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    GarbageStackError,
    NonZeroAncillaError,
    SimulationError,
    TypeTagError,
    ValueOverflowError,
    WidthError,
)

U64 = np.uint64

#: Branches with |amplitude| at or below this are dropped after an
#: interference operation.
DEFAULT_PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class TypeTag:
    """Semantic type of a register's word: how its bits are read."""

    kind: str  # "unsigned-int" | "signed-int" | "fixed-point" | "boolean"
    frac_bits: int = 0

    def as_float(self, word: int, width: int) -> float:
        """Numeric value of ``word`` under this tag."""
        if self.kind == "signed-int":
            sign_bit = 1 << (width - 1)
            return float(word - (1 << width)) if word & sign_bit else float(word)
        if self.kind == "fixed-point":
            return word / float(1 << self.frac_bits)
        return float(word)

    def __str__(self) -> str:
        if self.kind == "fixed-point":
            return f"fixed-point({self.frac_bits})"
        return self.kind


UNSIGNED = TypeTag("unsigned-int")
SIGNED = TypeTag("signed-int")
BOOLEAN = TypeTag("boolean")


def fixed_point(frac_bits: int) -> TypeTag:
    return TypeTag("fixed-point", frac_bits)


_uid_counter = itertools.count(1)


@dataclass(frozen=True)
class Register:
    """Handle and metadata of one quantum register."""

    uid: int
    width: int
    tag: TypeTag
    name: str

    def __repr__(self) -> str:
        return f"<reg {self.name}:{self.width}b {self.tag}>"


@dataclass
class ResourceStats:
    """Running maxima of simulator resource usage.

    Maxima never shrink within a run: deallocation recycles space but
    the high-water marks persist.
    """

    max_working_registers: int = 0
    max_working_qubits: int = 0
    max_branches: int = 0
    op_count: int = 0

    def snapshot(self) -> "ResourceStats":
        return replace(self)


def width_mask(width: int) -> np.uint64:
    return U64((1 << width) - 1)


class SparseState:
    """Branch table of a multi-register system, plus its garbage stack.

    Single-writer: no operation may run concurrently with another on
    the same state. Branch order is canonical (lexicographic by
    register values in allocation order) whenever it is observable;
    internally it is restored lazily because value-changing operations
    never create duplicate branches.
    """

    def __init__(self, prune_tol: float = DEFAULT_PRUNE_TOL):
        self.prune_tol = float(prune_tol)
        self._regs: list[Register] = []
        self._rows: dict[int, int] = {}  # register uid -> row index
        self._values = np.zeros((0, 1), dtype=U64)
        self._amps = np.ones(1, dtype=np.complex128)
        self._stack: list[tuple[Register, Register]] = []  # (slot, source)
        self._cur_qubits = 0
        self._dirty = False
        self.stats = ResourceStats()

    # ------------------------------------------------------------------
    # introspection

    @property
    def num_branches(self) -> int:
        return self._amps.shape[0]

    @property
    def registers(self) -> tuple[Register, ...]:
        return tuple(self._regs)

    @property
    def garbage_depth(self) -> int:
        return len(self._stack)

    def norm(self) -> float:
        """Sum of squared amplitude magnitudes."""
        return float(np.sum(np.abs(self._amps) ** 2))

    def resource_report(self) -> ResourceStats:
        return self.stats.snapshot()

    def row(self, reg: Register) -> np.ndarray:
        """The (num_branches,) value array of ``reg``. A live view."""
        try:
            return self._values[self._rows[reg.uid]]
        except KeyError:
            raise SimulationError(f"register {reg.name} is not allocated here") from None

    def branches(self) -> list[tuple[tuple[int, ...], complex]]:
        """Canonically ordered (values, amplitude) pairs."""
        self.canonicalize()
        out = []
        for i in range(self.num_branches):
            vals = tuple(int(v) for v in self._values[:, i])
            out.append((vals, complex(self._amps[i])))
        return out

    def dump(self) -> str:
        """Debug listing, one canonical branch per line.

        Format: ``<name>=<hex> ... amp=<re>,<im>``.
        """
        self.canonicalize()
        lines = []
        for i in range(self.num_branches):
            parts = [
                f"{r.name}={int(self._values[k, i]):x}"
                for k, r in enumerate(self._regs)
            ]
            a = self._amps[i]
            parts.append(f"amp={float(a.real)!r},{float(a.imag)!r}")
            lines.append(" ".join(parts))
        return "\n".join(lines)

    def copy(self) -> "SparseState":
        dup = SparseState(self.prune_tol)
        dup._regs = list(self._regs)
        dup._rows = dict(self._rows)
        dup._values = self._values.copy()
        dup._amps = self._amps.copy()
        dup._stack = list(self._stack)
        dup._cur_qubits = self._cur_qubits
        dup._dirty = self._dirty
        dup.stats = self.stats.snapshot()
        return dup

    # ------------------------------------------------------------------
    # register lifecycle

    def alloc_register(self, width: int, tag: TypeTag = UNSIGNED, name: str | None = None) -> Register:
        """Append a zero-valued register to every branch."""
        if not 1 <= width <= 64:
            raise WidthError(f"register width must be in [1, 64], got {width}")
        if tag.kind == "boolean" and width != 1:
            raise WidthError("boolean registers are 1 qubit wide")
        if tag.kind == "fixed-point" and not 0 < tag.frac_bits <= width:
            raise WidthError(f"fixed-point fraction {tag.frac_bits} exceeds width {width}")
        uid = next(_uid_counter)
        reg = Register(uid, width, tag, name or f"r{uid}")
        self._rows[uid] = len(self._regs)
        self._regs.append(reg)
        self._values = np.vstack([self._values, np.zeros((1, self.num_branches), dtype=U64)])
        self._cur_qubits += width
        self.stats.max_working_registers = max(self.stats.max_working_registers, len(self._regs))
        self.stats.max_working_qubits = max(self.stats.max_working_qubits, self._cur_qubits)
        self.note_op()
        return reg

    def free_register(self, reg: Register) -> None:
        """Remove a register whose value is 0 in every branch."""
        vals = self.row(reg)
        if np.any(vals != 0):
            raise NonZeroAncillaError(
                f"register {reg.name} is not zero in all branches; uncompute it before freeing"
            )
        k = self._rows.pop(reg.uid)
        self._regs.pop(k)
        self._values = np.delete(self._values, k, axis=0)
        for r in self._regs[k:]:
            self._rows[r.uid] -= 1
        self._cur_qubits -= reg.width
        self.note_op()

    # ------------------------------------------------------------------
    # garbage stack

    def push_garbage(self, reg: Register) -> None:
        """Swap ``reg`` with a fresh zero slot on top of the garbage stack.

        The register reads 0 afterwards; the slot keeps the per-branch
        values and counts toward qubit usage until popped.
        """
        self.row(reg)  # validates allocation
        slot = self.alloc_register(reg.width, reg.tag, name=f"gs{len(self._stack)}.{reg.name}")
        k = self._rows[reg.uid]
        sk = self._rows[slot.uid]
        self._values[sk] = self._values[k]
        self._values[k] = 0
        self._stack.append((slot, reg))
        self.note_op()

    def pop_garbage(self, reg: Register) -> None:
        """Restore the most recent unmatched push into ``reg``."""
        if not self._stack:
            raise GarbageStackError("pop on an empty garbage stack")
        slot, source = self._stack[-1]
        if source.uid != reg.uid:
            raise GarbageStackError(
                f"out-of-order pop: top of stack belongs to {source.name}, not {reg.name}"
            )
        vals = self.row(reg)
        if np.any(vals != 0):
            raise NonZeroAncillaError(f"pop into non-zero register {reg.name}")
        k = self._rows[reg.uid]
        sk = self._rows[slot.uid]
        self._values[k] = self._values[sk]
        self._values[sk] = 0
        self._stack.pop()
        self.free_register(slot)
        self.note_op()

    # ------------------------------------------------------------------
    # branch-table plumbing used by the operation modules

    def set_branches(self, assignment: dict[Register, np.ndarray | list], amps) -> None:
        """Replace the branch table. Classical initialization plumbing,
        not a circuit operation; callers are responsible for norm."""
        amps = np.asarray(amps, dtype=np.complex128)
        m = amps.shape[0]
        vals = np.zeros((len(self._regs), m), dtype=U64)
        for reg, v in assignment.items():
            arr = np.asarray(v, dtype=U64)
            if arr.shape != (m,):
                raise SimulationError("branch value arrays must match the amplitude count")
            if np.any(arr > width_mask(reg.width)):
                raise ValueOverflowError(f"value exceeds width of {reg.name}")
            vals[self._rows[reg.uid]] = arr
        if m and np.unique(vals.T, axis=0).shape[0] != m:
            raise SimulationError("duplicate branches in initialization")
        self._values = vals
        self._amps = amps
        self._dirty = True
        self.note_op()

    def replace_branches(self, values: np.ndarray, amps: np.ndarray) -> None:
        """Install a new branch table (interference-operation output)."""
        assert values.shape == (len(self._regs), amps.shape[0])
        self._values = values
        self._amps = amps
        self._dirty = True

    def control_mask(self, controls) -> np.ndarray | None:
        """Boolean branch mask for value-equality controls.

        ``controls`` is a sequence of (register, required value) pairs;
        None means every branch participates.
        """
        if not controls:
            return None
        mask = np.ones(self.num_branches, dtype=bool)
        for reg, want in controls:
            if int(want) > int(width_mask(reg.width)):
                raise ValueOverflowError(f"control value {want} exceeds width of {reg.name}")
            mask &= self.row(reg) == U64(int(want))
        return mask

    def canonicalize(self) -> None:
        """Restore lexicographic branch order (register-allocation order,
        first register most significant)."""
        if not self._dirty:
            return
        if self.num_branches > 1 and len(self._regs) > 0:
            order = np.lexsort(self._values[::-1])
            self._values = self._values[:, order]
            self._amps = self._amps[order]
            dup = np.all(self._values[:, 1:] == self._values[:, :-1], axis=0)
            if np.any(dup):
                raise SimulationError("duplicate branches detected; merge step was skipped")
        self._dirty = False

    def mark_dirty(self) -> None:
        self._dirty = True

    def note_op(self, n: int = 1) -> None:
        self.stats.op_count += n
        if self.num_branches > self.stats.max_branches:
            self.stats.max_branches = self.num_branches

    def require_tag(self, reg: Register, *kinds: str) -> None:
        if reg.tag.kind not in kinds:
            raise TypeTagError(
                f"register {reg.name} has type {reg.tag}, expected one of {kinds}"
            )
