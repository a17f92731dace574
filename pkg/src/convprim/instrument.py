"""Counted kernel runs and the reference/fast memory-access ratio.

Counts are element-granular reads (loads) and writes (stores) of the input,
weight, widened-filter, column and output buffers. A value held in a register
and reused inside a 2x2 GEMM block is loaded once. Padded taps are not loads.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .cases import random_case
from .counters import OpCounters, new_counter_array
from .errors import ConfigurationError, UnsupportedPathError
from .fastpath import run_fast
from .layer import ADD, LayerSpec, ShiftTable
from .qtensor import QTensor
from .reference import run_reference, shift_op

REFERENCE = "ref"
FAST = "fast"
PATHS = (REFERENCE, FAST)
_PATH_ALIASES = {"ref": REFERENCE, "reference": REFERENCE, "fast": FAST}


def normalize_path(path: str) -> str:
    try:
        return _PATH_ALIASES[path]
    except KeyError:
        raise ConfigurationError(f"unknown path {path!r}; expected ref or fast") from None


def has_fast_path(spec: LayerSpec) -> bool:
    return spec.kind != ADD


def run_counted(spec: LayerSpec, path: str, x: QTensor, w) -> tuple[QTensor, OpCounters]:
    path = normalize_path(path)
    counters = new_counter_array()
    if path == FAST:
        if not has_fast_path(spec):
            raise UnsupportedPathError(f"{spec.kind} convolution has no fast path")
        out = run_fast(spec, x, w, counters)
    else:
        out = run_reference(spec, x, w, counters)
    return out, OpCounters.from_array(counters)


def count_shift_op(x: QTensor, table: ShiftTable) -> tuple[QTensor, OpCounters]:
    counters = new_counter_array()
    out = shift_op(x, table, counters)
    return out, OpCounters.from_array(counters)


def counters_for(spec: LayerSpec, path: str, seed: int = 0) -> OpCounters:
    x, w = random_case(spec, seed)
    return run_counted(spec, path, x, w)[1]


def accesses_per_mac(c: OpCounters) -> Fraction:
    if c.mul == 0:
        raise ConfigurationError("no multiplies recorded; accesses per MAC undefined")
    return Fraction(c.accesses, c.mul)


def access_ratio(spec: LayerSpec, seed: int = 0, counters: Optional[dict] = None) -> Fraction:
    """(reference accesses per MAC) / (fast accesses per MAC); counts do not depend on data."""
    if not has_fast_path(spec):
        raise UnsupportedPathError(f"{spec.kind} convolution has no fast path")
    x, w = random_case(spec, seed)
    ref = run_counted(spec, REFERENCE, x, w)[1]
    fast = run_counted(spec, FAST, x, w)[1]
    if counters is not None:
        counters.update(ref=ref, fast=fast)
    return accesses_per_mac(ref) / accesses_per_mac(fast)
