import math

import numpy as np
import pytest

from qwalksim import matrixgen as mg
from qwalksim.semiquantum import QramImage
from qwalksim.state import U64, SparseState


def build_csc(n_rows: int, rows: dict, k_w: int = 8, s: int | None = None) -> mg.CscMatrixImage:
    """Hand-build a packed matrix from {row: [(col, value), ...]}.

    s defaults to the largest row length rounded up to a power of two;
    shorter rows get the standard increasing padding indices.
    """
    s_raw = max(len(v) for v in rows.values())
    if s is None:
        s = 1 << math.ceil(math.log2(s_raw))
    n_bits = int(math.log2(n_rows)) + 1
    elements = np.zeros(n_rows * s, dtype=U64)
    cols = np.zeros(n_rows * s, dtype=U64)
    for j in range(n_rows):
        entries = sorted(rows.get(j, []))
        pad = [(n_rows + i, 0.0) for i in range(s - len(entries))]
        for l, (c, val) in enumerate(entries + pad):
            cols[j * s + l] = c
            elements[j * s + l] = mg.quantize(val, k_w)
    csc = mg.CscMatrixImage(
        n_rows=n_rows, s=s, elements=elements, col_indices=cols,
        element_offset=0, sparsity_offset=n_rows * s, word_lengths=(k_w, n_bits),
    )
    csc.validate()
    return csc


def sidecar_of(csc: mg.CscMatrixImage, kappa: float = 0.0, seed: int = 0) -> dict:
    return {
        "N": csc.n_rows, "s": csc.s, "k_w": csc.k_w, "n": csc.n,
        "elementOffset": csc.element_offset, "sparsityOffset": csc.sparsity_offset,
        "kappa": kappa, "seed": seed,
    }


def packed_band(n_rows: int, bandwidth: int, seed: int, k_w: int = 8):
    """(csc, image, sidecar, dense) for one generated band matrix."""
    spec = mg.BandMatrixSpec(n_rows, bandwidth, k_w, seed)
    dense = mg.gen_band_matrix(spec)
    csc, kappa = mg.preprocess(dense, k_w)
    return csc, mg.pack_qram(csc), sidecar_of(csc, kappa, seed), mg.reconstruct_dense(csc)


def random_state(rng, widths, max_branches=8, complex_amps=True) -> tuple[SparseState, list]:
    """A normalized state over fresh registers of the given widths."""
    state = SparseState()
    regs = [state.alloc_register(w, name=f"t{i}") for i, w in enumerate(widths)]
    total_bits = sum(widths)
    m = int(rng.integers(1, min(max_branches, 1 << total_bits) + 1))
    codes = rng.choice(1 << total_bits, size=m, replace=False)
    amps = rng.normal(size=m) + (1j * rng.normal(size=m) if complex_amps else 0.0)
    amps = amps / np.linalg.norm(amps)
    assign = {}
    shift = 0
    for reg, w in zip(regs, widths):
        assign[reg] = (codes >> shift) & ((1 << w) - 1)
        shift += w
    state.set_branches({r: v.astype(U64) for r, v in assign.items()}, amps.astype(np.complex128))
    return state, regs


def states_equal(a: SparseState, b: SparseState, amp_tol: float = 1e-12) -> bool:
    """Bitwise equality on register values, amplitudes within amp_tol."""
    ba, bb = a.branches(), b.branches()
    if len(ba) != len(bb):
        return False
    return all(
        va == vb and abs(xa - xb) <= amp_tol for (va, xa), (vb, xb) in zip(ba, bb)
    )
