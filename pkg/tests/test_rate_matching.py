"""Matrix arrangement, circular reading, LLR folding, class assignment."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcpolar.channel import BPSK, QAM16, QAM64
from rcpolar.polar import PolarCodeSpec
from rcpolar.puncturing import PuncturingSequence, expand_regular, reference_base32_sequence
from rcpolar.rate_matching import (
    RateMatcher,
    TxPlan,
    arrange,
    assign_bicm_columns,
    build_tx_map,
    de_rate_match,
    rate_match,
)


def simple_rm(n=4, split=(2, 2), order=(0, 2, 1, 3), mod=BPSK, **kw):
    N = 1 << n
    spec = PolarCodeSpec(n=n, k=N, info_set=tuple(range(1, N + 1)), split=split)
    seq = PuncturingSequence(base_len=1 << split[0], order=order)
    return RateMatcher(spec=spec, sequence=seq, modulation=mod, **kw)


def big_rm(mod=BPSK, split=(5, 7), **kw):
    n = split[0] + split[1]
    N = 1 << n
    spec = PolarCodeSpec(n=n, k=N, info_set=tuple(range(1, N + 1)), split=split)
    return RateMatcher(spec=spec, sequence=reference_base32_sequence(),
                       modulation=mod, **kw)


class TestArrange:
    def test_small_direct(self):
        rm = simple_rm(n=2, split=(1, 1), order=(0, 1))
        m = arrange(np.array([1, 2, 3, 4]), rm)
        assert np.array_equal(m, [[1, 2], [3, 4]])

    def test_element_formula(self):
        rm = simple_rm()
        x = np.arange(1, 17)
        m = arrange(x, rm)
        assert m[1, 2] == 7  # row 2, column 3 holds x_7

    def test_4096_shape_first_row(self):
        rm = big_rm()
        x = np.arange(1, 4097)
        m = arrange(x, rm)
        assert m.shape == (128, 32)
        assert np.array_equal(m[0], np.arange(1, 33))

    def test_length_mismatch(self):
        rm = simple_rm()
        with pytest.raises(ValueError):
            arrange(np.zeros(15), rm)


class TestRateMatch:
    def test_full_length_is_permutation(self):
        rm = simple_rm()
        out = rate_match(np.arange(16), rm, TxPlan(L=16, t=1, r=1, mode="cc"))
        assert sorted(out.tolist()) == list(range(16))

    def test_reverse_order_reading(self):
        rm = simple_rm()
        assert rm.read_columns == (3, 1, 2, 0)
        out = rate_match(np.arange(16), rm, TxPlan(L=12, t=1, r=1, mode="cc"))
        assert set(range(16)) - set(out.tolist()) == {0, 4, 8, 12}

    def test_ir_start_column(self):
        rm = big_rm()
        plan = TxPlan(L=128, t=4, r=2, mode="ir")
        assert rm.start_column(plan) == 8  # 1-based column 9

    def test_cc_always_starts_first_column(self):
        rm = big_rm()
        for r in (1, 2, 3, 4):
            assert rm.start_column(TxPlan(L=128, t=4, r=r, mode="cc")) == 0

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            TxPlan(L=0, t=1, r=1, mode="cc")

    @given(st.integers(min_value=1, max_value=16), st.integers(min_value=1, max_value=3))
    @settings(max_examples=30, deadline=None)
    def test_circularity(self, L, c):
        rm = simple_rm()
        N = 16
        short = rate_match(np.arange(N), rm, TxPlan(L=L, t=1, r=1, mode="cc"))
        longer = rate_match(np.arange(N), rm, TxPlan(L=L + N * c, t=1, r=1, mode="cc"))
        assert np.array_equal(longer[:L], short)
        counts = np.bincount(longer, minlength=N)
        base = np.bincount(rate_match(np.arange(N), rm, TxPlan(L=L, t=1, r=1, mode="cc")),
                           minlength=N)
        assert np.array_equal(counts, base + c)

    @pytest.mark.parametrize("m", range(0, 33))
    def test_puncture_set_identity(self, m):
        # never-emitted positions at L = N - m*2^q match column expansion
        rm = big_rm(split=(5, 3))
        N = rm.spec.N
        L = N - m * 8
        if L == 0:
            return
        emitted = set(rate_match(np.arange(N), rm,
                                 TxPlan(L=L, t=1, r=1, mode="cc")).tolist())
        expected = set(expand_regular(rm.sequence, rm.spec, m).positions)
        assert set(range(N)) - emitted == expected

    def test_column_integrity(self):
        # every aligned run of 2^q transmitted bits stays inside one column
        rm = big_rm(split=(5, 3))
        out = rate_match(np.arange(rm.spec.N), rm,
                         TxPlan(L=rm.spec.N, t=1, r=1, mode="cc"))
        for s in range(0, rm.spec.N, 8):
            cols = set((out[s : s + 8] % 32).tolist())
            assert len(cols) == 1


class TestDeRateMatch:
    def test_round_trip_identity(self):
        rm = simple_rm()
        plan = TxPlan(L=16, t=1, r=1, mode="cc")
        llrs = np.random.default_rng(0).normal(size=16)
        stream = llrs[rate_match(np.arange(16), rm, plan)]
        acc = de_rate_match(stream, rm, plan, np.zeros(16))
        assert np.allclose(acc, llrs)

    def test_wrapped_column_sums(self):
        rm = simple_rm()
        plan = TxPlan(L=20, t=1, r=1, mode="cc")
        stream = np.ones(20)
        acc = de_rate_match(stream, rm, plan, np.zeros(16))
        first_col = rm.read_columns[0]
        doubled = [r * 4 + first_col for r in range(4)]
        expect = np.ones(16)
        expect[doubled] = 2.0
        assert np.array_equal(acc, expect)

    def test_additivity_two_passes(self):
        rm = simple_rm()
        plan = TxPlan(L=12, t=2, r=1, mode="cc")
        stream = np.random.default_rng(1).normal(size=12)
        acc = np.zeros(16)
        de_rate_match(stream, rm, plan, acc)
        once = acc.copy()
        de_rate_match(stream, rm, plan, acc)
        assert np.allclose(acc, 2.0 * once)

    def test_untouched_positions_stay_zero(self):
        rm = simple_rm()
        plan = TxPlan(L=12, t=1, r=1, mode="cc")
        acc = de_rate_match(np.ones(12), rm, plan, np.zeros(16))
        assert np.all(acc[[0, 4, 8, 12]] == 0.0)

    def test_batched(self):
        rm = simple_rm()
        plan = TxPlan(L=16, t=1, r=1, mode="cc")
        llrs = np.random.default_rng(2).normal(size=(5, 16))
        stream = llrs[:, rate_match(np.arange(16), rm, plan)]
        acc = de_rate_match(stream, rm, plan, np.zeros((5, 16)))
        assert np.allclose(acc, llrs)

    def test_length_mismatch(self):
        rm = simple_rm()
        plan = TxPlan(L=12, t=1, r=1, mode="cc")
        with pytest.raises(ValueError):
            de_rate_match(np.ones(11), rm, plan, np.zeros(16))


class TestBicmAssignment:
    def test_bpsk_single_class(self):
        rm = simple_rm()
        classes = assign_bicm_columns(rm, TxPlan(L=16, t=1, r=1, mode="cc"))
        assert np.all(classes == 0)

    def test_qam16_halves(self):
        rm = big_rm(mod=QAM16)
        classes = assign_bicm_columns(rm, TxPlan(L=4096, t=1, r=1, mode="cc"))
        assert len(classes) == 32
        assert np.all(classes[:16] == 0) and np.all(classes[16:] == 1)

    def test_qam64_three_groups_earlier_larger(self):
        rm = big_rm(mod=QAM64)
        classes = assign_bicm_columns(rm, TxPlan(L=4096, t=1, r=1, mode="cc"))
        counts = np.bincount(classes)
        assert counts.tolist() == [11, 11, 10]

    def test_ir_shift(self):
        rm = big_rm(mod=QAM16)
        c1 = assign_bicm_columns(rm, TxPlan(L=4096, t=4, r=1, mode="ir"))
        plan2 = TxPlan(L=4096, t=4, r=2, mode="ir")
        c2 = assign_bicm_columns(rm, plan2)
        # reading order for r=2 starts 8 slots later, so the class of a
        # physical column shifts by 8 slots relative to r=1
        start = rm.start_column(plan2)
        assert start == 8
        phys_r1 = {rm.read_columns[i]: c1[i] for i in range(32)}
        phys_r2 = {rm.read_columns[(start + i) % 32]: c2[i] for i in range(32)}
        shifted = {rm.read_columns[(i + start) % 32]: phys_r1[rm.read_columns[i]]
                   for i in range(32)}
        assert phys_r2 == shifted

    def test_cc_no_shift_by_default(self):
        rm = big_rm(mod=QAM16)
        c1 = assign_bicm_columns(rm, TxPlan(L=4096, t=4, r=1, mode="cc"))
        c3 = assign_bicm_columns(rm, TxPlan(L=4096, t=4, r=3, mode="cc"))
        assert np.array_equal(c1, c3)

    def test_cc_shift_flag(self):
        rm = big_rm(mod=QAM16, shift_cc_bicm=True)
        c1 = assign_bicm_columns(rm, TxPlan(L=4096, t=4, r=1, mode="cc"))
        c2 = assign_bicm_columns(rm, TxPlan(L=4096, t=4, r=2, mode="cc"))
        assert not np.array_equal(c1, c2)
        assert np.array_equal(np.roll(c1, 8), c2)


class TestTxMap:
    def test_bpsk_identity(self):
        rm = simple_rm()
        tm = build_tx_map(rm, TxPlan(L=16, t=1, r=1, mode="cc"))
        assert np.array_equal(tm.stream_to_symbit, np.arange(16))
        assert tm.n_symbols == 16

    def test_qam16_full_length_no_padding(self):
        rm = big_rm(mod=QAM16)
        tm = build_tx_map(rm, TxPlan(L=4096, t=1, r=1, mode="cc"))
        assert tm.n_symbols == 1024
        assert len(set(tm.stream_to_symbit.tolist())) == 4096

    def test_class_bits_land_in_class_positions(self):
        rm = big_rm(mod=QAM16)
        plan = TxPlan(L=4096, t=1, r=1, mode="cc")
        tm = build_tx_map(rm, plan)
        classes = assign_bicm_columns(rm, plan)
        cls_of_stream = classes[np.arange(4096) // 128]
        sym_pos = tm.stream_to_symbit % 4
        assert np.all((sym_pos // 2) == cls_of_stream)

    def test_partial_column_padding(self):
        rm = big_rm(mod=QAM16)
        tm = build_tx_map(rm, TxPlan(L=130, t=1, r=1, mode="cc"))
        # 130 bits over two classes; the uneven split pads to a symbol boundary
        assert tm.n_symbols * 4 >= 130
        assert len(set(tm.stream_to_symbit.tolist())) == 130
