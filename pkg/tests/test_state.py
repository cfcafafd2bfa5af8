import numpy as np
import pytest

from qwalksim import semiquantum as sq
from qwalksim.errors import (
    GarbageStackError,
    NonZeroAncillaError,
    SimulationError,
    WidthError,
)
from qwalksim.interference import hadamard_transform
from qwalksim.state import BOOLEAN, SparseState, U64, fixed_point

from conftest import random_state


def test_alloc_zero_extends_single_branch():
    st = SparseState()
    r = st.alloc_register(5)
    assert st.branches() == [((0,), 1 + 0j)]
    assert abs(st.norm() - 1.0) < 1e-12
    assert r.width == 5


def test_alloc_counts_are_additive():
    st = SparseState()
    st.alloc_register(5)
    st.alloc_register(8)
    rep = st.resource_report()
    assert rep.max_working_qubits == 13
    assert rep.max_working_registers == 2


def test_alloc_zero_extends_every_branch():
    st = SparseState()
    a = st.alloc_register(4, name="a")
    st.set_branches({a: [1, 4, 9]}, np.full(3, 3 ** -0.5))
    b = st.alloc_register(6, name="b")
    assert all(vals[1] == 0 for vals, _ in st.branches())
    assert b.width == 6


@pytest.mark.parametrize("width", [0, 65, -3])
def test_alloc_rejects_bad_widths(width):
    with pytest.raises(WidthError):
        SparseState().alloc_register(width)


def test_free_requires_zero_in_all_branches():
    st = SparseState()
    a = st.alloc_register(4, name="a")
    b = st.alloc_register(4, name="b")
    st.set_branches({a: [0, 0], b: [1, 2]}, np.full(2, 2 ** -0.5))
    st.free_register(a)
    with pytest.raises(NonZeroAncillaError):
        st.free_register(b)


def test_free_with_value_three_raises():
    st = SparseState()
    r = st.alloc_register(4)
    sq.xor_const(st, r, 3)
    with pytest.raises(NonZeroAncillaError):
        st.free_register(r)


def test_alloc_compute_uncompute_free_leaves_stats():
    st = SparseState()
    keep = st.alloc_register(3, name="keep")
    anc = st.alloc_register(5, name="anc")
    sq.xor_const(st, anc, 21)
    sq.xor_const(st, anc, 21)
    before = st.resource_report()
    st.free_register(anc)
    after = st.resource_report()
    assert (after.max_working_qubits, after.max_working_registers) == (
        before.max_working_qubits,
        before.max_working_registers,
    )
    assert keep in st.registers


def test_push_pop_round_trip():
    st = SparseState()
    r = st.alloc_register(4)
    sq.xor_const(st, r, 7)
    st.push_garbage(r)
    assert int(st.row(r)[0]) == 0
    st.pop_garbage(r)
    assert int(st.row(r)[0]) == 7


def test_pop_is_lifo():
    st = SparseState()
    a = st.alloc_register(4, name="a")
    b = st.alloc_register(4, name="b")
    sq.xor_const(st, a, 1)
    sq.xor_const(st, b, 2)
    st.push_garbage(a)
    st.push_garbage(b)
    with pytest.raises(GarbageStackError):
        st.pop_garbage(a)
    st.pop_garbage(b)
    st.pop_garbage(a)
    assert (int(st.row(a)[0]), int(st.row(b)[0])) == (1, 2)


def test_pop_empty_stack():
    st = SparseState()
    r = st.alloc_register(4)
    with pytest.raises(GarbageStackError):
        st.pop_garbage(r)


def test_pop_into_nonzero_register():
    st = SparseState()
    r = st.alloc_register(4)
    sq.xor_const(st, r, 5)
    st.push_garbage(r)
    sq.xor_const(st, r, 1)
    with pytest.raises(NonZeroAncillaError):
        st.pop_garbage(r)


def test_push_pop_preserves_per_branch_values():
    st = SparseState()
    tag = st.alloc_register(1, name="tag")
    r = st.alloc_register(4, name="r")
    st.set_branches({tag: [0, 1], r: [2, 5]}, np.full(2, 2 ** -0.5))
    st.push_garbage(r)
    assert np.all(st.row(r) == 0)
    st.pop_garbage(r)
    assert sorted(map(int, st.row(r))) == [2, 5]


def test_push_counts_toward_qubit_usage():
    st = SparseState()
    r = st.alloc_register(8)
    base = st.resource_report().max_working_qubits
    st.push_garbage(r)
    assert st.resource_report().max_working_qubits == base + 8


def test_norm_single_branch():
    st = SparseState()
    st.alloc_register(3)
    assert st.norm() == 1.0


def test_norm_three_four_five():
    st = SparseState()
    r = st.alloc_register(3)
    st.set_branches({r: [1, 2]}, [0.6, 0.8])
    assert abs(st.norm() - 1.0) < 1e-12


def test_norm_after_uniform_superposition():
    st = SparseState()
    r = st.alloc_register(3)
    hadamard_transform(st, r, 3)
    assert st.num_branches == 8
    assert abs(st.norm() - 1.0) < 1e-9


def test_resource_report_fresh_state_is_zero():
    rep = SparseState().resource_report()
    assert (rep.max_working_registers, rep.max_working_qubits, rep.max_branches, rep.op_count) == (0, 0, 0, 0)


def test_resource_report_survives_frees():
    st = SparseState()
    a = st.alloc_register(5)
    b = st.alloc_register(8)
    st.free_register(b)
    st.free_register(a)
    rep = st.resource_report()
    assert rep.max_working_qubits == 13
    assert rep.max_working_registers == 2


def test_resource_monotonicity_under_random_ops():
    rng = np.random.default_rng(123)
    st, regs = random_state(rng, [4, 2])
    seen = []
    for _ in range(30):
        sq.xor_const(st, regs[0], int(rng.integers(0, 16)))
        hadamard_transform(st, regs[1], 2)
        rep = st.resource_report()
        seen.append((rep.max_working_qubits, rep.max_branches, rep.op_count))
    assert all(x <= y for x, y in zip(seen, seen[1:]))


def test_branch_uniqueness_is_enforced():
    st = SparseState()
    r = st.alloc_register(4)
    with pytest.raises(SimulationError):
        st.set_branches({r: [3, 3]}, np.full(2, 2 ** -0.5))


def test_dump_is_canonical_and_hex():
    st = SparseState()
    a = st.alloc_register(8, name="reg1")
    b = st.alloc_register(8, name="reg2")
    st.set_branches({a: [255, 3], b: [1, 255]}, [0.6, 0.8])
    lines = st.dump().splitlines()
    assert lines[0].startswith("reg1=3 reg2=ff amp=")
    assert lines[1].startswith("reg1=ff reg2=1 amp=")
    parts = lines[0].rsplit("amp=", 1)[1].split(",")
    assert float(parts[0]) == 0.8 and float(parts[1]) == 0.0


def test_boolean_registers_are_one_qubit():
    st = SparseState()
    with pytest.raises(WidthError):
        st.alloc_register(2, BOOLEAN)


def test_fixed_point_fraction_must_fit():
    st = SparseState()
    with pytest.raises(WidthError):
        st.alloc_register(4, fixed_point(9))
    r = st.alloc_register(8, fixed_point(8))
    assert r.tag.as_float(64, 8) == 0.25
