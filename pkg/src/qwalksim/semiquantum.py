"""Branch-parallel reversible operations.

Every operation here maps each branch independently and never changes
the branch count: quantum arithmetic through the out-of-place XOR
protocol, in-place updates through inverse pairs, QRAM queries,
register swaps, and the controlled phase flip.

Value-transforming callables (``f``, ``f_inv``, mappings) receive and
return numpy uint64 arrays so whole branch columns are processed at
once. Integer arithmetic wraps modulo 2**width of the written
register, which keeps every in-place update a bijection.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import SimulationError, ValueOverflowError, WidthError
from .state import Register, SparseState, U64, width_mask

Controls = tuple[tuple[Register, int], ...]


@dataclass(frozen=True)
class QramImage:
    """Flat word memory addressed by a quantum register.

    A query XORs the addressed word into the data register; addresses
    at or beyond ``len(words)`` read 0, which keeps queries unitary on
    padded address ranges.
    """

    words: np.ndarray  # uint64
    address_width: int
    word_width: int

    def __post_init__(self):
        object.__setattr__(self, "words", np.ascontiguousarray(self.words, dtype=U64))
        if not 1 <= self.address_width <= 64 or not 1 <= self.word_width <= 64:
            raise WidthError("address and word widths must be in [1, 64]")
        if self.words.shape[0] > (1 << self.address_width):
            raise WidthError("more words than the address width can reach")
        if self.words.size and int(self.words.max()) > int(width_mask(self.word_width)):
            raise ValueOverflowError("stored word exceeds the declared word width")

    def save(self, path) -> None:
        """Little-endian binary: header (addressWidth:u8, wordWidth:u8,
        count:u64), then count words of 8 bytes each."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<BBQ", self.address_width, self.word_width, self.words.shape[0]))
            fh.write(self.words.astype("<u8").tobytes())

    @classmethod
    def load(cls, path) -> "QramImage":
        with open(path, "rb") as fh:
            header = fh.read(10)
            if len(header) != 10:
                raise SimulationError(f"truncated QRAM image header in {path}")
            aw, ww, count = struct.unpack("<BBQ", header)
            payload = fh.read(8 * count)
        if len(payload) != 8 * count:
            raise SimulationError(f"truncated QRAM image payload in {path}")
        words = np.frombuffer(payload, dtype="<u8").astype(U64)
        return cls(words, aw, ww)


@dataclass(frozen=True)
class SemiQuantumSpec:
    """A declared branch-parallel operation.

    ``mapping`` takes one value tuple over the touched registers
    (inputs followed by outputs) and returns the rewritten tuple; it
    must restrict to a bijection and leave the input positions
    unchanged. Controls are whole-register equality conditions; a
    branch that fails them is left untouched.
    """

    input_regs: tuple[Register, ...]
    output_regs: tuple[Register, ...]
    control_regs: Controls = ()
    mapping: object = None  # callable tuple[int, ...] -> tuple[int, ...]

    @property
    def touched(self) -> tuple[Register, ...]:
        seen = {r.uid for r in self.input_regs}
        extra = tuple(r for r in self.output_regs if r.uid not in seen)
        return self.input_regs + extra


def mapping_is_bijection(mapping, widths) -> bool:
    """Exhaustively check a mapping over the given widths (<= 20 joint bits)."""
    total = sum(widths)
    if total > 20:
        raise WidthError("exhaustive bijection check limited to 20 joint bits")
    seen = set()
    for vals in product(*(range(1 << w) for w in widths)):
        out = tuple(int(v) for v in mapping(vals))
        if len(out) != len(widths):
            return False
        if any(o >> w for o, w in zip(out, widths)):
            return False
        if out in seen:
            return False
        seen.add(out)
    return True


def apply_semi_quantum(state: SparseState, spec: SemiQuantumSpec) -> None:
    """Rewrite each branch's touched registers by the declared mapping."""
    regs = spec.touched
    rows = [state.row(r) for r in regs]
    mask = state.control_mask(spec.control_regs)
    idx = np.nonzero(mask)[0] if mask is not None else np.arange(state.num_branches)
    if idx.size:
        cols = np.stack([r[idx] for r in rows], axis=1)
        uniq, inverse = np.unique(cols, axis=0, return_inverse=True)
        n_in = len(spec.input_regs)
        images = np.empty_like(uniq)
        for u, row in enumerate(uniq):
            out = spec.mapping(tuple(int(v) for v in row))
            if len(out) != len(regs):
                raise SimulationError("mapping arity does not match touched registers")
            if tuple(out[:n_in]) != tuple(int(v) for v in row[:n_in]):
                raise SimulationError("mapping must leave input registers unchanged")
            for v, r in zip(out, regs):
                if int(v) > int(width_mask(r.width)):
                    raise ValueOverflowError(f"mapping overflows width of {r.name}")
            images[u] = out
        new_cols = images[inverse]
        for k, r in enumerate(rows):
            r[idx] = new_cols[:, k]
    state.mark_dirty()
    state.note_op()


def xor_out_of_place(state: SparseState, f, inputs, output: Register, controls: Controls = ()) -> None:
    """output ^= f(inputs) per branch; self-inverse by construction.

    ``f`` is vectorized over uint64 arrays; its result is masked to the
    output width (modular wrap-around).
    """
    if any(r.uid == output.uid for r in inputs):
        raise SimulationError(f"output register {output.name} aliases an input")
    rows = [state.row(r) for r in inputs]
    out = state.row(output)
    val = np.asarray(f(*rows), dtype=U64) & width_mask(output.width)
    mask = state.control_mask(controls)
    if mask is None:
        out ^= val
    else:
        out[mask] ^= val[mask] if val.ndim else val
    state.mark_dirty()
    state.note_op()


def in_place_via_inverse_pair(
    state: SparseState, f, f_inv, target: Register, params=(), controls: Controls = ()
) -> None:
    """target <- f(target, params) in place.

    Equivalent to the out-of-place computation of f followed by the
    uncomputation of the old value through f_inv; the round trip is
    verified on the values actually present, so a non-injective f is
    always detected.
    """
    from .errors import NonInjectiveError

    if any(r.uid == target.uid for r in params):
        raise SimulationError(f"target register {target.name} aliases a parameter")
    prow = [state.row(r) for r in params]
    trow = state.row(target)
    wm = width_mask(target.width)
    new = np.asarray(f(trow, *prow), dtype=U64) & wm
    back = np.asarray(f_inv(new, *prow), dtype=U64) & wm
    mask = state.control_mask(controls)
    bad = back != trow
    if mask is not None:
        bad &= mask
    if np.any(bad):
        raise NonInjectiveError("in-place update is not invertible on the values present")
    if mask is None:
        trow[:] = new
    else:
        trow[mask] = new[mask]
    state.mark_dirty()
    state.note_op()


def qram_query(state: SparseState, image: QramImage, addr: Register, data: Register, controls: Controls = ()) -> None:
    """data ^= words[addr] per branch. The word is masked to the data
    register's width (readers of a mixed-width image mask)."""
    if addr.width > image.address_width:
        raise WidthError(
            f"address register {addr.name} ({addr.width}b) wider than image address space"
            f" ({image.address_width}b)"
        )
    if data.width > image.word_width:
        raise WidthError(
            f"data register {data.name} ({data.width}b) wider than image words"
            f" ({image.word_width}b)"
        )
    arow = state.row(addr)
    drow = state.row(data)
    idx = arow.astype(np.intp)
    inside = idx < image.words.shape[0]
    w = np.where(inside, image.words[np.minimum(idx, max(image.words.shape[0] - 1, 0))], U64(0))
    w &= width_mask(data.width)
    mask = state.control_mask(controls)
    if mask is None:
        drow ^= w
    else:
        drow[mask] ^= w[mask]
    state.mark_dirty()
    state.note_op()


def swap_registers(state: SparseState, r1: Register, r2: Register, controls: Controls = ()) -> None:
    """Exchange the per-branch values of two equal-width registers."""
    if r1.width != r2.width:
        raise WidthError(f"swap width mismatch: {r1.name}:{r1.width} vs {r2.name}:{r2.width}")
    a = state.row(r1)
    b = state.row(r2)
    mask = state.control_mask(controls)
    if mask is None:
        tmp = a.copy()
        a[:] = b
        b[:] = tmp
    else:
        tmp = a[mask].copy()
        a[mask] = b[mask]
        b[mask] = tmp
    state.mark_dirty()
    state.note_op()


def phase_flip_if_any_nonzero(state: SparseState, regs) -> None:
    """Multiply the amplitude by -1 on branches where any listed
    register is nonzero."""
    hit = np.zeros(state.num_branches, dtype=bool)
    for r in regs:
        hit |= state.row(r) != 0
    state._amps[hit] = -state._amps[hit]
    state.note_op()


# ----------------------------------------------------------------------
# arithmetic catalog: add, in-place add, multiply, comparators.
# All are instances of the XOR / inverse-pair protocols above.


def _require_uint(state: SparseState, *regs: Register) -> None:
    for r in regs:
        state.require_tag(r, "unsigned-int")


def add(state, x1: Register, x2: Register, out: Register, controls: Controls = ()) -> None:
    _require_uint(state, x1, x2, out)
    xor_out_of_place(state, lambda a, b: a + b, (x1, x2), out, controls)


def mul(state, x1: Register, x2: Register, out: Register, controls: Controls = ()) -> None:
    _require_uint(state, x1, x2, out)
    xor_out_of_place(state, lambda a, b: a * b, (x1, x2), out, controls)


def add_in_place(state, target: Register, addend: Register, controls: Controls = ()) -> None:
    _require_uint(state, target, addend)
    in_place_via_inverse_pair(state, lambda t, p: t + p, lambda t, p: t - p, target, (addend,), controls)


def add_const_in_place(state, target: Register, c: int, controls: Controls = ()) -> None:
    state.require_tag(target, "unsigned-int")
    cc = U64(c % (1 << target.width))
    in_place_via_inverse_pair(state, lambda t: t + cc, lambda t: t - cc, target, (), controls)


def compare_less(state, a: Register, b: Register, out: Register, controls: Controls = ()) -> None:
    """out ^= (a < b), unsigned. out is a 1-qubit register."""
    if out.width != 1:
        raise WidthError("comparison results are 1-qubit")
    xor_out_of_place(state, lambda x, y: (x < y).astype(U64), (a, b), out, controls)


def compare_equal(state, a: Register, b: Register, out: Register, controls: Controls = ()) -> None:
    """out ^= (a == b). out is a 1-qubit register."""
    if out.width != 1:
        raise WidthError("comparison results are 1-qubit")
    xor_out_of_place(state, lambda x, y: (x == y).astype(U64), (a, b), out, controls)


def xor_const(state, reg: Register, c: int, controls: Controls = ()) -> None:
    """reg ^= c; with c=1 on a 1-qubit register this is a (controlled) flip."""
    if int(c) > int(width_mask(reg.width)):
        raise ValueOverflowError(f"constant {c} exceeds width of {reg.name}")
    xor_out_of_place(state, lambda: U64(int(c)), (), reg, controls)
