import numpy as np
import pytest

from qwalksim import semiquantum as sq
from qwalksim.errors import SimulationError
from qwalksim.qbs import QbsContext, classical_binary_search, qbs
from qwalksim.semiquantum import QramImage
from qwalksim.state import SparseState, U64


def window_image(window, offset=4, address_width=8, word_width=7):
    words = np.zeros(offset + len(window), dtype=U64)
    words[offset:] = window
    return QramImage(words, address_width, word_width)


def search_state(offset, targets, n_bits=7, addr_bits=8):
    """One branch per target, uniform amplitudes."""
    st = SparseState()
    off = st.alloc_register(addr_bits, name="off")
    tgt = st.alloc_register(n_bits, name="tgt")
    out = st.alloc_register(n_bits, name="out")
    m = len(targets)
    st.set_branches(
        {off: np.full(m, offset, dtype=U64), tgt: np.asarray(targets, dtype=U64)},
        np.full(m, m ** -0.5),
    )
    return st, off, tgt, out


# ------------------------------------------------------------- classical


def test_classical_finds_third_entry():
    assert classical_binary_search([2, 5, 8, 10], 8) == (2, True)


def test_classical_absent_returns_zero():
    assert classical_binary_search([2, 5, 8, 10], 3) == (0, False)


def test_classical_singleton():
    assert classical_binary_search([9], 9) == (0, True)


def test_classical_every_position_every_size():
    rng = np.random.default_rng(6)
    for s in (1, 2, 4, 8, 16, 32, 64):
        window = sorted(map(int, rng.choice(128, size=s, replace=False)))
        for i, value in enumerate(window):
            assert classical_binary_search(window, value) == (i, True)
        absent = [x for x in range(128) if x not in set(window)]
        for x in absent[:10]:
            assert classical_binary_search(window, x) == (0, False)


# --------------------------------------------------------------- quantum


def test_qbs_paper_window_finds_index_two():
    img = window_image([2, 5, 8, 10])
    st, off, tgt, out = search_state(4, [8])
    qbs(st, img, QbsContext(off, tgt, out, 4))
    assert int(st.row(out)[0]) == 2


def test_qbs_absent_target_writes_zero():
    img = window_image([2, 5, 8, 10])
    st, off, tgt, out = search_state(4, [3])
    qbs(st, img, QbsContext(off, tgt, out, 4))
    assert int(st.row(out)[0]) == 0


def test_qbs_twice_restores_output():
    img = window_image([2, 5, 8, 10])
    st, off, tgt, out = search_state(4, [8, 5, 3])
    sq.xor_const(st, out, 0b101)
    ctx = QbsContext(off, tgt, out, 4)
    qbs(st, img, ctx)
    qbs(st, img, ctx)
    assert np.all(st.row(out) == 0b101)


def test_qbs_superposed_targets_match_classical():
    rng = np.random.default_rng(13)
    for s in (2, 4, 8, 16):
        window = np.sort(rng.choice(128, size=s, replace=False))
        img = window_image(window, offset=8, address_width=9)
        st, off, tgt, out = search_state(8, list(range(128)), addr_bits=9)
        qbs(st, img, QbsContext(off, tgt, out, s))
        wl = [int(w) for w in window]
        for (offv, tv, ov), _amp in st.branches():
            pos, found = classical_binary_search(wl, tv)
            assert ov == (pos if found else 0)
        assert st.num_branches == 128


def test_qbs_is_zero_garbage():
    img = window_image([1, 4, 6, 9])
    st, off, tgt, out = search_state(4, [6, 2])
    regs_before = len(st.registers)
    depth_before = st.garbage_depth
    qbs(st, img, QbsContext(off, tgt, out, 4))
    assert len(st.registers) == regs_before
    assert st.garbage_depth == depth_before
    assert st.num_branches == 2  # semi-quantum


def test_qbs_fixed_control_flow():
    # op count per call is independent of which branch terminates early
    img = window_image([2, 5, 8, 10])
    counts = []
    for target in (2, 5, 8, 10, 0, 127):
        st, off, tgt, out = search_state(4, [target])
        before = st.stats.op_count
        qbs(st, img, QbsContext(off, tgt, out, 4))
        counts.append(st.stats.op_count - before)
    assert len(set(counts)) == 1


def test_qbs_absolute_output_mode():
    img = window_image([2, 5, 8, 10])
    st, off, tgt, out = search_state(4, [8])
    qbs(st, img, QbsContext(off, tgt, out, 4, absolute_output=True))
    assert int(st.row(out)[0]) == (4 + 2) % 128


def test_qbs_rejects_non_power_window():
    img = window_image([2, 5, 8])
    st, off, tgt, out = search_state(4, [2])
    with pytest.raises(SimulationError):
        QbsContext(off, tgt, out, 3)


def test_qbs_debug_detects_unsorted_window():
    img = window_image([5, 2, 8, 10])
    st, off, tgt, out = search_state(4, [8])
    with pytest.raises(SimulationError):
        qbs(st, img, QbsContext(off, tgt, out, 4), debug_check_sorted=True)
