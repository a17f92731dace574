"""Scalar reference kernels for the five primitives.

Loops follow the textbook sum order (input channel, kernel row, kernel column)
with stride 1 and zero same-padding. Requantization is a plain arithmetic right
shift of the 32-bit accumulator followed by int8 saturation; no rounding.
These kernels define correctness for :mod:`convprim.fastpath`.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from numba import njit

from .counters import ABS, ADD_SUB, LOADS, MUL, STORES, new_counter_array
from .errors import ConfigurationError, DimensionError
from .layer import ADD, DWSEP, GROUPED, SHIFT, STANDARD, LayerSpec, ShiftTable
from .qtensor import QTensor, QWeights, from_array

_NO_BIAS = np.zeros(0, dtype=np.int32)


@njit(cache=True, inline="always")
def saturate_int8(v):
    if v > 127:
        return 127
    if v < -128:
        return -128
    return v


@njit(cache=True)
def _conv_kernel(x, w, bias, groups, shift, out, counters):
    height, width, _ = x.shape
    kernel = w.shape[0]
    cin_g = w.shape[2]
    cout = w.shape[3]
    cout_g = cout // groups
    pad = kernel // 2
    terms = cin_g * kernel * kernel
    has_bias = bias.shape[0] > 0
    mul = 0
    adds = 0
    loads = 0
    stores = 0
    for k in range(height):
        for l in range(width):
            for n in range(cout):
                base = (n // cout_g) * cin_g
                acc = np.int64(0)
                # one pass over (m, i, j) in sum order; indices advance like an odometer
                m = 0
                i = 0
                j = 0
                for _ in range(terms):
                    r = k + i - pad
                    c = l + j - pad
                    wv = np.int64(w[i, j, m, n])
                    loads += 1
                    xv = np.int64(0)
                    if r >= 0 and r < height and c >= 0 and c < width:
                        xv = np.int64(x[r, c, base + m])
                        loads += 1
                    acc += wv * xv
                    mul += 1
                    adds += 1
                    j += 1
                    if j == kernel:
                        j = 0
                        i += 1
                        if i == kernel:
                            i = 0
                            m += 1
                if has_bias:
                    acc += bias[n]
                    loads += 1
                    adds += 1
                out[k, l, n] = saturate_int8(acc >> shift)
                stores += 1
    counters[MUL] += mul
    counters[ADD_SUB] += adds
    counters[LOADS] += loads
    counters[STORES] += stores


@njit(cache=True)
def _add_conv_kernel(x, w, bias, shift_x, shift_w, shift, out, counters):
    height, width, _ = x.shape
    kernel = w.shape[0]
    cin = w.shape[2]
    cout = w.shape[3]
    pad = kernel // 2
    terms = cin * kernel * kernel
    has_bias = bias.shape[0] > 0
    adds = 0
    absops = 0
    loads = 0
    stores = 0
    for k in range(height):
        for l in range(width):
            for n in range(cout):
                acc = np.int64(0)
                m = 0
                i = 0
                j = 0
                for _ in range(terms):
                    r = k + i - pad
                    c = l + j - pad
                    wv = np.int64(w[i, j, m, n]) << shift_w
                    loads += 1
                    xv = np.int64(0)
                    if r >= 0 and r < height and c >= 0 and c < width:
                        xv = np.int64(x[r, c, m]) << shift_x
                        loads += 1
                    acc -= abs(xv - wv)
                    absops += 1
                    adds += 2
                    j += 1
                    if j == kernel:
                        j = 0
                        i += 1
                        if i == kernel:
                            i = 0
                            m += 1
                if has_bias:
                    acc += bias[n]
                    loads += 1
                    adds += 1
                out[k, l, n] = saturate_int8(acc >> shift)
                stores += 1
    counters[ADD_SUB] += adds
    counters[ABS] += absops
    counters[LOADS] += loads
    counters[STORES] += stores


@njit(cache=True)
def _shift_kernel(x, alphas, betas, out, counters):
    height, width, channels = x.shape
    loads = 0
    for k in range(height):
        for l in range(width):
            for m in range(channels):
                r = k + alphas[m]
                c = l + betas[m]
                if r >= 0 and r < height and c >= 0 and c < width:
                    out[k, l, m] = x[r, c, m]
                    loads += 1
                else:
                    out[k, l, m] = 0
    counters[LOADS] += loads
    counters[STORES] += height * width * channels


def _counters(counters: Optional[np.ndarray]) -> np.ndarray:
    return new_counter_array() if counters is None else counters


def _bias(w: QWeights) -> np.ndarray:
    return _NO_BIAS if w.bias is None else w.bias


def check_input(x: QTensor, spec: LayerSpec, dec: Optional[int] = None) -> None:
    expected = (spec.input_width, spec.input_width, spec.in_channels)
    if x.shape != expected:
        raise DimensionError(f"input shape {x.shape} != {expected}")
    dec = spec.dec_input if dec is None else dec
    if x.dec != dec:
        raise ConfigurationError(f"input dec {x.dec} != layer dec_input {dec}")


def check_weights(w: QWeights, shape: tuple, dec: int) -> None:
    if w.shape != tuple(shape):
        raise DimensionError(f"weight shape {w.shape} != {tuple(shape)}")
    if w.dec != dec:
        raise ConfigurationError(f"weight dec {w.dec} != layer dec_weight {dec}")


def _run_conv(x: QTensor, w: QWeights, groups: int, shift: int, dec_out: int,
              counters: np.ndarray) -> QTensor:
    out = np.empty((x.height, x.width, w.out_channels), dtype=np.int8)
    _conv_kernel(x.array, w.array, _bias(w), groups, shift, out, counters)
    return from_array(out, dec_out)


def conv_standard(x: QTensor, w: QWeights, spec: LayerSpec, counters=None) -> QTensor:
    if spec.kind not in (STANDARD, GROUPED):
        raise ConfigurationError(f"conv_standard cannot run a {spec.kind} layer")
    if spec.effective_groups != 1:
        raise ConfigurationError("conv_standard needs groups=1; use conv_grouped")
    check_input(x, spec)
    k = spec.kernel
    check_weights(w, (k, k, spec.in_channels, spec.out_channels), spec.dec_weight)
    return _run_conv(x, w, 1, spec.output_shift(), spec.dec_output, _counters(counters))


def conv_grouped(x: QTensor, w: QWeights, spec: LayerSpec, counters=None) -> QTensor:
    if spec.kind not in (STANDARD, GROUPED):
        raise ConfigurationError(f"conv_grouped cannot run a {spec.kind} layer")
    g = spec.effective_groups
    check_input(x, spec)
    k = spec.kernel
    check_weights(w, (k, k, spec.in_channels // g, spec.out_channels), spec.dec_weight)
    return _run_conv(x, w, g, spec.output_shift(), spec.dec_output, _counters(counters))


def conv_depthwise_separable(x: QTensor, w_dw: QWeights, w_pw: QWeights, spec: LayerSpec,
                             counters=None) -> QTensor:
    if spec.kind != DWSEP:
        raise ConfigurationError(f"expected a depthwise separable layer, got {spec.kind}")
    counters = _counters(counters)
    mid = conv_grouped(x, w_dw, spec.depthwise_spec(), counters)
    return conv_standard(mid, w_pw, spec.pointwise_spec(), counters)


def shift_op(x: QTensor, table: ShiftTable, counters=None) -> QTensor:
    if len(table) != x.channels:
        raise ConfigurationError(f"shift table has {len(table)} entries for {x.channels} channels")
    out = np.empty(x.shape, dtype=np.int8)
    _shift_kernel(
        x.array,
        np.asarray(table.alphas, dtype=np.int64),
        np.asarray(table.betas, dtype=np.int64),
        out,
        _counters(counters),
    )
    return from_array(out, x.dec)


def conv_shift(x: QTensor, w_pw: QWeights, table: Optional[ShiftTable], spec: LayerSpec,
               counters=None) -> QTensor:
    if spec.kind != SHIFT:
        raise ConfigurationError(f"expected a shift layer, got {spec.kind}")
    table = spec.shift_table if table is None else table
    table.validate(spec.in_channels, spec.kernel)
    check_input(x, spec)
    counters = _counters(counters)
    return conv_standard(shift_op(x, table, counters), w_pw, spec.pointwise_spec(), counters)


def add_alignment(dec_input: int, dec_weight: int) -> tuple[int, int]:
    """Left shifts (input, weight) that bring both operands to a common exponent."""
    if dec_input > dec_weight:
        return 0, dec_input - dec_weight
    if dec_input < dec_weight:
        return dec_weight - dec_input, 0
    return 0, 0


def conv_add(x: QTensor, w: QWeights, spec: LayerSpec, counters=None) -> QTensor:
    """Negated L1 similarity; every output is <= 0 unless a positive bias is supplied."""
    if spec.kind != ADD:
        raise ConfigurationError(f"expected an add layer, got {spec.kind}")
    check_input(x, spec)
    k = spec.kernel
    check_weights(w, (k, k, spec.in_channels, spec.out_channels), spec.dec_weight)
    shift_x, shift_w = add_alignment(spec.dec_input, spec.dec_weight)
    out = np.empty((x.height, x.width, w.out_channels), dtype=np.int8)
    _add_conv_kernel(x.array, w.array, _bias(w), shift_x, shift_w, spec.output_shift(),
                     out, _counters(counters))
    return from_array(out, spec.dec_output)


def run_reference(spec: LayerSpec, x: QTensor, weights, counters=None) -> QTensor:
    """Dispatch on ``spec.kind``; ``weights`` is ``(w_dw, w_pw)`` for depthwise separable."""
    if spec.kind == STANDARD:
        return conv_standard(x, weights, spec, counters)
    if spec.kind == GROUPED:
        return conv_grouped(x, weights, spec, counters)
    if spec.kind == DWSEP:
        w_dw, w_pw = weights
        return conv_depthwise_separable(x, w_dw, w_pw, spec, counters)
    if spec.kind == SHIFT:
        return conv_shift(x, weights, None, spec, counters)
    if spec.kind == ADD:
        return conv_add(x, weights, spec, counters)
    raise ConfigurationError(f"unknown kind {spec.kind}")
