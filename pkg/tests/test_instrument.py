from fractions import Fraction

import numpy as np
import pytest

from convprim.bench.plan import GRID
from convprim.cases import random_case
from convprim.costmodel import executed_abs_ops, executed_macs
from convprim.errors import UnsupportedPathError
from convprim.fastpath import run_fast
from convprim.instrument import access_ratio, count_shift_op, counters_for, run_counted
from convprim.layer import LayerSpec, default_shift_table
from convprim.counters import OpCounters
from convprim.qtensor import new_qtensor
from convprim.reference import run_reference

KINDS = ("standard", "grouped", "depthwise_separable", "shift", "add")


def small(kind, **kw):
    base = dict(input_width=6, in_channels=4, out_channels=6, kernel=3,
                groups=2 if kind == "grouped" else 1, dec_output=-8)
    base.update(kw)
    return LayerSpec(kind, **base)


@pytest.mark.parametrize("kind", KINDS)
def test_counted_output_matches_plain(kind):
    spec = small(kind)
    x, w = random_case(spec, 1)
    out, c = run_counted(spec, "ref", x, w)
    assert out == run_reference(spec, x, w)
    assert c.mul == executed_macs(spec)
    assert c.abs_ops == executed_abs_ops(spec)
    if kind != "add":
        out, c = run_counted(spec, "fast", x, w)
        assert out == run_fast(spec, x, w)
        assert c.mul == executed_macs(spec)


@pytest.mark.parametrize("kind", KINDS)
def test_counters_independent_of_data(kind):
    spec = small(kind)
    paths = ("ref",) if kind == "add" else ("ref", "fast")
    for path in paths:
        assert counters_for(spec, path, seed=1) == counters_for(spec, path, seed=2)


def test_reference_standard_access_discipline():
    # 1x1 kernel, no padding: two loads per MAC plus one store per output
    spec = LayerSpec("standard", 3, 4, 5, 1, dec_output=-8)
    c = counters_for(spec, "ref")
    assert c.mul == 9 * 4 * 5
    assert c.loads == 2 * c.mul
    assert c.stores == 9 * 5


def test_shift_op_alone():
    x = new_qtensor(5, 5, 9, 0, np.arange(225) % 100)
    _, c = count_shift_op(x, default_shift_table(9, 3))
    assert c.mul == 0 and c.add_sub == 0
    assert c.stores == 225


def test_add_has_no_fast_path():
    spec = small("add")
    x, w = random_case(spec, 0)
    with pytest.raises(UnsupportedPathError):
        run_counted(spec, "fast", x, w)
    with pytest.raises(UnsupportedPathError):
        access_ratio(spec)


def test_access_ratio_above_one_for_experiment3():
    plan = GRID[3]
    for width in plan.sweep_values:
        assert access_ratio(plan.spec_at(width, "standard")) > 1


def test_access_ratio_data_independent():
    spec = small("standard")
    assert access_ratio(spec, seed=0) == access_ratio(spec, seed=99)


def test_grouped_and_standard_ratios_similar():
    plan = GRID[3]
    for width in (8, 16, 32):
        std = access_ratio(plan.spec_at(width, "standard"))
        grp = access_ratio(plan.spec_at(width, "grouped"))
        assert abs(std - grp) / std < Fraction(1, 4)


def test_counter_helpers():
    c = OpCounters(1, 2, 3, 4, 5, 6)
    assert c.accesses == 9
    assert (c + c).mul == 2 and (c + c).column_peak == 6
    c.reset()
    assert c == OpCounters()
