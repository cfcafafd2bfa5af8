"""Programmatic property suites behind the verify command.

Each suite exercises one module contract at a desk-checkable size and
reports pass/fail with a short detail string; the CLI turns the result
into an exit status. Sizes are chosen so the whole run stays in the
seconds range.
"""

from __future__ import annotations

import numpy as np

from . import cks, matrixgen as mg, oracle, semiquantum as sq, walk
from .errors import GarbageStackError, NonZeroAncillaError, SimulationError
from .interference import conditional_rotation, hadamard_transform
from .qbs import QbsContext, classical_binary_search, qbs
from .state import BOOLEAN, SparseState, U64, fixed_point


def _suite(name):
    def wrap(fn):
        fn.suite_name = name
        return fn

    return wrap


@_suite("state-garbage-discipline")
def check_state() -> str:
    st = SparseState()
    a = st.alloc_register(5, name="a")
    b = st.alloc_register(8, name="b")
    assert st.stats.max_working_qubits == 13
    sq.xor_const(st, a, 7)
    st.push_garbage(a)
    assert int(st.row(a)[0]) == 0
    st.push_garbage(b)
    try:
        st.pop_garbage(a)
        raise AssertionError("out-of-order pop must fail")
    except GarbageStackError:
        pass
    st.pop_garbage(b)
    st.pop_garbage(a)
    assert int(st.row(a)[0]) == 7
    sq.xor_const(st, a, 7)
    st.free_register(a)
    try:
        sq.xor_const(st, b, 1)
        st.free_register(b)
        raise AssertionError("free of a dirty register must fail")
    except NonZeroAncillaError:
        pass
    assert abs(st.norm() - 1.0) < 1e-12
    return "push/pop, free, norms"


@_suite("semiquantum-involutions")
def check_semiquantum() -> str:
    st = SparseState()
    x = st.alloc_register(6, name="x")
    y = st.alloc_register(6, name="y")
    z = st.alloc_register(6, name="z")
    hadamard_transform(st, x, 3)
    hadamard_transform(st, y, 2)
    sq.add(st, x, y, z)
    sq.add(st, x, y, z)
    assert np.all(st.row(z) == 0), "xor involution"
    img = sq.QramImage(np.arange(16, dtype=U64), 6, 6)
    a6 = st.alloc_register(6, name="addr")
    sq.qram_query(st, img, a6, z)
    sq.qram_query(st, img, a6, z)
    assert np.all(st.row(z) == 0), "qram involution"
    for c in (1, 3, 17, 63):
        stc = SparseState()
        t = stc.alloc_register(4, name="t")
        hadamard_transform(stc, t, 4)
        before = stc.row(t).copy()
        sq.add_const_in_place(stc, t, c)
        after = stc.row(t)
        assert sorted(map(int, after)) == sorted(map(int, before)), "in-place add permutes"
    return "involutions and in-place bijections"


@_suite("interference-identities")
def check_interference() -> str:
    rng = np.random.default_rng(11)
    for _ in range(20):
        st = SparseState()
        r = st.alloc_register(4, name="r")
        w = st.alloc_register(3, name="w")
        m = rng.integers(1, 9)
        vals = rng.choice(16, size=m, replace=False).astype(np.uint64)
        amps = rng.normal(size=m) + 1j * rng.normal(size=m)
        amps /= np.linalg.norm(amps)
        st.set_branches({r: vals & np.uint64(7), w: vals >> np.uint64(3)}, amps)
        snap = st.dump()
        hadamard_transform(st, r, 3)
        hadamard_transform(st, r, 3)
        assert st.dump() == snap or _amps_close(st, snap), "H twice is identity"
    st = SparseState()
    f = st.alloc_register(1, BOOLEAN, name="f")
    v = st.alloc_register(8, fixed_point(8), name="v")
    sq.xor_const(st, v, 64)  # 0.25
    conditional_rotation(st, f, v)
    br = {vals[0]: amp for vals, amp in st.branches()}
    assert abs(br[0] - 0.5) < 1e-12 and abs(br[1] - np.sqrt(0.75)) < 1e-12
    conditional_rotation(st, f, v, adjoint=True)
    assert st.num_branches == 1 and abs(st.branches()[0][1] - 1.0) < 1e-12
    return "hadamard involution, rotation adjoint"


def _amps_close(st, snap, tol=1e-12) -> bool:
    other = snap.splitlines()
    mine = st.dump().splitlines()
    if len(other) != len(mine):
        return False
    for a, b in zip(mine, other):
        va, aa = a.rsplit(" amp=", 1)
        vb, ab = b.rsplit(" amp=", 1)
        if va != vb:
            return False
        ra, ia = map(float, aa.split(","))
        rb, ib = map(float, ab.split(","))
        if abs(complex(ra, ia) - complex(rb, ib)) > tol:
            return False
    return True


@_suite("qbs-classical-equivalence")
def check_qbs() -> str:
    rng = np.random.default_rng(5)
    checked = 0
    for s in (2, 4, 8):
        for _ in range(8):
            window = np.sort(rng.choice(64, size=s, replace=False)).astype(U64)
            words = np.concatenate([np.zeros(4, dtype=U64), window])
            img = sq.QramImage(words, 7, 6)
            for target in range(64):
                st = SparseState()
                off = st.alloc_register(7, name="off")
                tgt = st.alloc_register(6, name="tgt")
                out = st.alloc_register(6, name="out")
                sq.xor_const(st, off, 4)
                sq.xor_const(st, tgt, target)
                qbs(st, img, QbsContext(off, tgt, out, s))
                got = int(st.row(out)[0])
                pos, found = classical_binary_search([int(w) for w in window], target)
                want = pos if found else 0
                assert got == want, f"s={s} target={target}: {got} != {want}"
                assert st.garbage_depth == 0 and len(st.registers) == 3
                checked += 1
    return f"{checked} searches match the classical reference"


def _packed(n_rows: int, bandwidth: int, seed: int):
    spec = mg.BandMatrixSpec(n_rows, bandwidth, 8, seed)
    dense = mg.gen_band_matrix(spec)
    csc, kappa = mg.preprocess(dense, 8)
    image = mg.pack_qram(csc)
    sidecar = {
        "N": csc.n_rows, "s": csc.s, "k_w": csc.k_w, "n": csc.n,
        "elementOffset": csc.element_offset, "sparsityOffset": csc.sparsity_offset,
        "kappa": kappa,
    }
    return csc, image, sidecar


@_suite("sparsity-oracle-bijection")
def check_os_prime_bijection() -> str:
    # all rows of an N=32 matrix in one superposed state: every row's
    # exhaustive (l, z) grid must come back as a permutation
    csc, image, sidecar = _packed(32, 2, 9)
    state, ctx = walk.new_walk_state(image, sidecar)
    space = 1 << ctx.n
    per_row = space * space
    grid = np.arange(csc.n_rows * per_row, dtype=U64)
    amps = np.full(grid.shape[0], 1.0 / np.sqrt(grid.shape[0]), dtype=np.complex128)
    state.set_branches(
        {ctx.j: grid // U64(per_row), ctx.k: (grid // U64(space)) % U64(space), ctx.kc: grid % U64(space)},
        amps,
    )
    walk.os_prime(state, ctx)
    state.canonicalize()  # raises on duplicate (j, k, kc) triples
    assert state.num_branches == grid.shape[0], "branch count preserved"
    rows, counts = np.unique(state.row(ctx.j), return_counts=True)
    assert rows.shape[0] == csc.n_rows and np.all(counts == per_row), "row register untouched"
    return f"N=32: {grid.shape[0]} (l,z) pairs permuted row-wise"


@_suite("walk-block-encoding")
def check_block_encoding() -> str:
    csc, image, sidecar = _packed(8, 1, 9)
    h = mg.reconstruct_dense(csc) / csc.s
    worst = 0.0
    st0, ctx = walk.new_walk_state(image, sidecar)
    for j in range(csc.n_rows):
        state = st0.copy()
        state.set_branches({ctx.j: np.array([j], dtype=U64)}, np.array([1.0 + 0j]))
        walk.t_tilde(state, ctx)
        walk.walk_swap(state, ctx)
        walk.t_tilde_adjoint(state, ctx)
        col = walk.flag_zero_vector(state, ctx)[: csc.n_rows]
        worst = max(worst, float(np.max(np.abs(col - h[:, j]))))
    assert worst <= 1e-10, f"block-encoding error {worst}"
    return f"max entry error {worst:.2e}"


@_suite("walk-chebyshev-identity")
def check_chebyshev() -> str:
    csc, image, sidecar = _packed(8, 1, 9)
    h = mg.reconstruct_dense(csc) / csc.s
    rng = np.random.default_rng(2)
    b = rng.random(csc.n_rows)
    b /= np.linalg.norm(b)
    t = oracle.cheb_apply(h, b, 10)
    state, ctx = walk.new_walk_state(image, sidecar)
    walk.load_input(state, ctx, b)
    walk.t_tilde(state, ctx)
    worst = 0.0
    for n in range(1, 11):
        walk.walk_w(state, ctx)
        probe = state.copy()
        walk.t_tilde_adjoint(probe, ctx)
        v = walk.flag_zero_vector(probe, ctx)
        worst = max(worst, float(np.max(np.abs(v[: csc.n_rows] - t[n]))))
    assert worst <= 1e-8, f"chebyshev error {worst}"
    return f"10 walk powers, max error {worst:.2e}"


@_suite("plan-coefficients")
def check_plan() -> str:
    expect = {1: [1.0], 2: [1.25, -0.25], 3: [1.375, -0.4375, 0.0625]}
    for b, coeffs in expect.items():
        plan = cks.chebyshev_plan(10.0, 1e-3, force_b=b)
        assert np.allclose(plan.coeffs, coeffs, atol=1e-12), f"b={b}"
    return "b in {1,2,3} match the symbolic expansions"


def check_image(matrix_path) -> str:
    image, sidecar = mg.load_image(matrix_path)
    csc = mg.unpack_qram(image, int(sidecar["N"]), int(sidecar["s"]), int(sidecar["k_w"]))
    csc.validate()
    repacked = mg.pack_qram(csc)
    assert np.array_equal(repacked.words, image.words), "pack/unpack round trip"
    return f"N={csc.n_rows} s={csc.s}: windows sorted, round trip exact"


check_image.suite_name = "image-integrity"


def run_all(matrix_path=None) -> list[dict]:
    suites = [
        check_state,
        check_semiquantum,
        check_interference,
        check_qbs,
        check_os_prime_bijection,
        check_block_encoding,
        check_chebyshev,
        check_plan,
    ]
    results = []
    for fn in suites:
        results.append(_run(fn))
    if matrix_path is not None:
        results.append(_run(check_image, matrix_path))
    return results


def _run(fn, *args) -> dict:
    try:
        detail = fn(*args)
        return {"name": fn.suite_name, "passed": True, "detail": detail}
    except Exception as exc:  # report, don't crash the suite runner
        return {"name": fn.suite_name, "passed": False, "detail": f"{type(exc).__name__}: {exc}"}
