from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convprim.bench.verify import check_case, random_spec
from convprim.cases import random_case
from convprim.counters import LOADS, MUL, new_counter_array
from convprim.errors import ContractError, DimensionError, UnsupportedPathError
from convprim.fastpath import (
    Im2ColBuffer,
    _gemm_block,
    conv_grouped_fast,
    conv_standard_fast,
    gemm_2x2_packed,
    im2col_patches,
    im2col_patches_shifted,
    packed_mac,
    run_fast,
)
from convprim.layer import LayerSpec, ShiftTable
from convprim.qtensor import QWeights, from_array, new_qtensor
from convprim.instrument import run_counted


def test_packed_mac_contract():
    assert packed_mac(1, 2, 3, 4, 0) == 11
    assert packed_mac(-32768, -32768, -32768, -32768, 0) == 2 * 2**30  # no saturation
    assert packed_mac(-7, 5, 3, -2, 100) == 100 - 21 - 10


def test_corner_patch_padding():
    x = new_qtensor(4, 4, 1, 0, np.arange(1, 17))
    spec = LayerSpec("standard", 4, 1, 1, 3)
    buf = im2col_patches(x, spec, [(0, 0)])
    col = buf.patches()[0]
    assert buf.valid_count == 1
    assert col.tolist() == [0, 0, 0, 0, 1, 2, 0, 5, 6]
    assert np.count_nonzero(col == 0) == 5


def test_pointwise_patch_is_channel_vector(rng):
    x = from_array(rng.integers(-128, 128, (3, 3, 5)).astype(np.int8), 0)
    buf = im2col_patches(x, LayerSpec("standard", 3, 5, 2, 1), [(1, 2), (2, 0)])
    assert np.array_equal(buf.patches(), x.array[[1, 2], [2, 0]])


def test_widening_is_exact():
    x = new_qtensor(1, 1, 3, 0, [-7, -128, 127])
    buf = im2col_patches(x, LayerSpec("standard", 1, 3, 1, 1), [(0, 0)])
    assert buf.columns.dtype == np.int16
    assert buf.patches()[0].tolist() == [-7, -128, 127]


def test_more_than_two_patches_rejected():
    x = new_qtensor(2, 2, 1, 0, [1, 2, 3, 4])
    with pytest.raises(ContractError):
        im2col_patches(x, LayerSpec("standard", 2, 1, 1, 1), [(0, 0), (0, 1), (1, 0)])
    with pytest.raises(ContractError):
        Im2ColBuffer(np.zeros((2, 1), np.int16), 3)


def test_grouped_patch_reads_group_channels(rng):
    x = from_array(rng.integers(-128, 128, (3, 3, 4)).astype(np.int8), 0)
    spec = LayerSpec("grouped", 3, 4, 4, 1, groups=2)
    buf = im2col_patches(x, spec, [(1, 1)], group=1)
    assert buf.patches()[0].tolist() == x.array[1, 1, 2:4].tolist()


def test_shifted_patch():
    x = from_array(np.arange(27).reshape(3, 3, 3).astype(np.int8), 0)
    spec = LayerSpec("shift", 3, 3, 1, 3, shift_table=ShiftTable(((1, 0), (0, 0), (0, 0))))
    col = im2col_patches_shifted(x, spec, None, [(1, 1)]).patches()[0]
    assert col.tolist() == [x.array[2, 1, 0], x.array[1, 1, 1], x.array[1, 1, 2]]
    # the same shift at the bottom row points outside: zero
    col = im2col_patches_shifted(x, spec, None, [(2, 1)]).patches()[0]
    assert col[0] == 0 and col[1] == x.array[2, 1, 1]


def test_shifted_zero_matches_pointwise(rng):
    x = from_array(rng.integers(-128, 128, (4, 4, 3)).astype(np.int8), 0)
    spec = LayerSpec("shift", 4, 3, 2, 3, shift_table=ShiftTable(((0, 0),) * 3))
    pos = [(0, 3), (3, 1)]
    a = im2col_patches_shifted(x, spec, None, pos)
    b = im2col_patches(x, LayerSpec("standard", 4, 3, 2, 1), pos)
    assert np.array_equal(a.columns, b.columns)


def test_gemm_two_terms():
    buf = Im2ColBuffer(np.array([[1, 2], [0, 0]], np.int16), 1)
    w = QWeights(1, 1, 2, 1, [3, 4], 0)
    assert gemm_2x2_packed(buf, w, [0]).tolist() == [[11]]


@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_gemm_block_equals_plain_dot(length, seed):
    rng = np.random.default_rng(seed)
    col = rng.integers(-128, 128, (2, length)).astype(np.int16)
    w = QWeights(1, 1, length, 3, rng.integers(-128, 128, 3 * length), 0)
    filt = w.array[0, 0].astype(np.int64)  # (length, 3)
    for npatch in (1, 2):
        for pair in ([0, 1], [1, 2], [2]):
            got = gemm_2x2_packed(Im2ColBuffer(col, npatch), w, pair)
            expected = col[:npatch].astype(np.int64) @ filt[:, pair]
            assert np.array_equal(got, expected)


def test_gemm_requantizes_like_reference():
    buf = Im2ColBuffer(np.array([[100, 100, 100], [-100, 50, 1]], np.int16), 2)
    w = QWeights(1, 1, 3, 2, [1, 2, 3, -1, 0, 5], 0)
    out = gemm_2x2_packed(buf, w, [0, 1], bias=[7, -7], shift=4)
    raw = np.array([[100, 100, 100], [-100, 50, 1]]) @ np.array([[1, 2], [3, -1], [0, 5]])
    assert np.array_equal(out, np.clip((raw + [7, -7]) >> 4, -128, 127))


def test_gemm_length_mismatch():
    buf = Im2ColBuffer(np.zeros((2, 3), np.int16), 2)
    with pytest.raises(DimensionError):
        gemm_2x2_packed(buf, QWeights(1, 1, 4, 2, np.zeros(8), 0), [0, 1])


def test_block_halves_loads_per_mac():
    length = 18
    col = np.ones((2, length), np.int16)
    rows = np.ones((2, length), np.int16)
    acc = np.zeros((2, 2), np.int64)
    c = new_counter_array()
    _gemm_block(col, 2, rows, 0, 2, length, acc, c)
    assert c[MUL] == 4 * length
    naive_loads_per_mac = 2  # one column and one filter element per MAC
    assert Fraction(int(c[LOADS]), int(c[MUL])) == Fraction(naive_loads_per_mac, 2)


def test_layer_fast_equals_reference_examples():
    for seed in range(40):
        rng = np.random.default_rng(seed)
        kind = ("standard", "grouped", "depthwise_separable", "shift")[seed % 4]
        res = check_case(random_spec(rng, kind), seed, with_bias=bool(seed % 3))
        assert res.ok, res.spec


def test_grouped_g1_fast_equals_standard_fast():
    spec = LayerSpec("grouped", 7, 6, 5, 3, groups=1, dec_output=-8)
    x, w = random_case(spec, 9)
    assert conv_grouped_fast(x, w, spec) == conv_standard_fast(x, w, spec)


def test_no_fast_add():
    spec = LayerSpec("add", 4, 2, 2, 3)
    x, w = random_case(spec, 0)
    with pytest.raises(UnsupportedPathError):
        run_fast(spec, x, w)


@pytest.mark.parametrize("kind", ["standard", "grouped", "depthwise_separable", "shift"])
def test_column_buffer_ceiling(kind):
    spec = LayerSpec(kind, 9, 8, 6, 5, groups=2 if kind == "grouped" else 1, dec_output=-8)
    x, w = random_case(spec, 0)
    _, c = run_counted(spec, "fast", x, w)
    cin_g = {"standard": 8, "grouped": 4, "depthwise_separable": 8, "shift": 8}[kind]
    kernel_area = 1 if kind == "shift" else 25
    # the depthwise stage has 1 channel per group; its pointwise stage has 8
    bound = 2 * max(kernel_area * (1 if kind == "depthwise_separable" else cin_g),
                    8 if kind == "depthwise_separable" else 0)
    assert 0 < c.column_peak <= bound
