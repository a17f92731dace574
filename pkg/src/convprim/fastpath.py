"""im2col + packed-MAC kernels, bit-exact with :mod:`convprim.reference`.

The column buffer holds at most two flattened patches, widened to int16. Filters
are widened once per call into (out_channels, patch_len) rows and consumed two
at a time, so every loaded column element feeds two dot products. Dot products
advance two terms per step through :func:`packed_mac`, which has the semantics
of a dual 16x16 multiply-accumulate into 32 bits; an odd patch length ends with
one scalar MAC. Add convolution has no fast path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .counters import ADD_SUB, COLUMN_PEAK, LOADS, MUL, STORES, new_counter_array
from .errors import ConfigurationError, ContractError, DimensionError, UnsupportedPathError
from .layer import ADD, DWSEP, GROUPED, SHIFT, STANDARD, LayerSpec, ShiftTable
from .qtensor import QTensor, QWeights, from_array
from .reference import _NO_BIAS, check_input, check_weights, saturate_int8

MAX_PATCHES = 2


@njit(cache=True, inline="always")
def packed_mac(a0, a1, b0, b1, acc):
    """acc + a0*b0 + a1*b1 with no intermediate saturation."""
    return acc + np.int64(a0) * np.int64(b0) + np.int64(a1) * np.int64(b1)


@njit(cache=True)
def _fill_patch(x, k, l, kernel, c0, cin_g, col, p, counters):
    height, width, _ = x.shape
    pad = kernel // 2
    idx = 0
    loads = 0
    for i in range(kernel):
        r = k + i - pad
        for j in range(kernel):
            c = l + j - pad
            if r >= 0 and r < height and c >= 0 and c < width:
                for m in range(cin_g):
                    col[p, idx] = x[r, c, c0 + m]
                    idx += 1
                loads += cin_g
            else:
                for m in range(cin_g):
                    col[p, idx] = 0
                    idx += 1
    counters[LOADS] += loads
    counters[STORES] += idx


@njit(cache=True)
def _fill_patch_shifted(x, k, l, alphas, betas, col, p, counters):
    height, width, channels = x.shape
    loads = 0
    for m in range(channels):
        r = k + alphas[m]
        c = l + betas[m]
        if r >= 0 and r < height and c >= 0 and c < width:
            col[p, m] = x[r, c, m]
            loads += 1
        else:
            col[p, m] = 0
    counters[LOADS] += loads
    counters[STORES] += channels


@njit(cache=True)
def _widen_filters(w):
    """(Hk, Hk, Cin_g, Cout) int8 -> (Cout, Hk*Hk*Cin_g) int16 rows in patch order."""
    kernel = w.shape[0]
    cin_g = w.shape[2]
    cout = w.shape[3]
    rows = np.empty((cout, kernel * kernel * cin_g), dtype=np.int16)
    for n in range(cout):
        idx = 0
        for i in range(kernel):
            for j in range(kernel):
                for m in range(cin_g):
                    rows[n, idx] = w[i, j, m, n]
                    idx += 1
    return rows


@njit(cache=True)
def _gemm_block(col, npatch, rows, f0, nfilt, length, acc, counters):
    """acc[p, q] = dot(col[p], rows[f0 + q]) for p < npatch, q < nfilt."""
    t = 0
    if npatch == 2 and nfilt == 2:
        a00 = np.int64(0)
        a01 = np.int64(0)
        a10 = np.int64(0)
        a11 = np.int64(0)
        while t + 1 < length:
            p0a = col[0, t]
            p0b = col[0, t + 1]
            p1a = col[1, t]
            p1b = col[1, t + 1]
            f0a = rows[f0, t]
            f0b = rows[f0, t + 1]
            f1a = rows[f0 + 1, t]
            f1b = rows[f0 + 1, t + 1]
            a00 = packed_mac(p0a, p0b, f0a, f0b, a00)
            a01 = packed_mac(p0a, p0b, f1a, f1b, a01)
            a10 = packed_mac(p1a, p1b, f0a, f0b, a10)
            a11 = packed_mac(p1a, p1b, f1a, f1b, a11)
            t += 2
        if t < length:
            p0a = col[0, t]
            p1a = col[1, t]
            f0a = rows[f0, t]
            f1a = rows[f0 + 1, t]
            a00 += np.int64(p0a) * f0a
            a01 += np.int64(p0a) * f1a
            a10 += np.int64(p1a) * f0a
            a11 += np.int64(p1a) * f1a
        acc[0, 0] = a00
        acc[0, 1] = a01
        acc[1, 0] = a10
        acc[1, 1] = a11
    elif npatch == 2 and nfilt == 1:
        # depthwise stages: one filter per group
        a00 = np.int64(0)
        a10 = np.int64(0)
        while t + 1 < length:
            f0a = rows[f0, t]
            f0b = rows[f0, t + 1]
            a00 = packed_mac(col[0, t], col[0, t + 1], f0a, f0b, a00)
            a10 = packed_mac(col[1, t], col[1, t + 1], f0a, f0b, a10)
            t += 2
        if t < length:
            a00 += np.int64(col[0, t]) * rows[f0, t]
            a10 += np.int64(col[1, t]) * rows[f0, t]
        acc[0, 0] = a00
        acc[1, 0] = a10
    else:
        for p in range(npatch):
            for q in range(nfilt):
                acc[p, q] = 0
        while t + 1 < length:
            for p in range(npatch):
                pa = col[p, t]
                pb = col[p, t + 1]
                for q in range(nfilt):
                    acc[p, q] = packed_mac(pa, pb, rows[f0 + q, t], rows[f0 + q, t + 1], acc[p, q])
            t += 2
        if t < length:
            for p in range(npatch):
                for q in range(nfilt):
                    acc[p, q] += np.int64(col[p, t]) * rows[f0 + q, t]
    # one load per operand element per step, shared across the whole block
    counters[LOADS] += length * (npatch + nfilt)
    counters[MUL] += length * npatch * nfilt
    counters[ADD_SUB] += length * npatch * nfilt


@njit(cache=True)
def _store_block(acc, npatch, pos, width, f0, nfilt, bias, shift, out, counters):
    has_bias = bias.shape[0] > 0
    for p in range(npatch):
        k = (pos + p) // width
        l = (pos + p) % width
        for q in range(nfilt):
            v = acc[p, q]
            if has_bias:
                v += bias[f0 + q]
                counters[LOADS] += 1
                counters[ADD_SUB] += 1
            out[k, l, f0 + q] = saturate_int8(v >> shift)
            counters[STORES] += 1


@njit(cache=True)
def _conv_fast_kernel(x, w, bias, groups, shift, out, counters):
    height, width, _ = x.shape
    kernel = w.shape[0]
    cin_g = w.shape[2]
    cout = w.shape[3]
    cout_g = cout // groups
    length = kernel * kernel * cin_g
    rows = _widen_filters(w)
    counters[LOADS] += cout * length
    counters[STORES] += cout * length
    col = np.empty((2, length), dtype=np.int16)
    acc = np.zeros((2, 2), dtype=np.int64)
    npos = height * width
    for g in range(groups):
        c0 = g * cin_g
        pos = 0
        while pos < npos:
            npatch = min(2, npos - pos)
            for p in range(npatch):
                _fill_patch(x, (pos + p) // width, (pos + p) % width, kernel, c0, cin_g,
                            col, p, counters)
            if npatch * length > counters[COLUMN_PEAK]:
                counters[COLUMN_PEAK] = npatch * length
            f0 = g * cout_g
            while f0 < (g + 1) * cout_g:
                nfilt = min(2, (g + 1) * cout_g - f0)
                _gemm_block(col, npatch, rows, f0, nfilt, length, acc, counters)
                _store_block(acc, npatch, pos, width, f0, nfilt, bias, shift, out, counters)
                f0 += 2
            pos += 2


@njit(cache=True)
def _shift_fast_kernel(x, alphas, betas, w, bias, shift, out, counters):
    height, width, channels = x.shape
    cout = w.shape[3]
    rows = _widen_filters(w)
    counters[LOADS] += cout * channels
    counters[STORES] += cout * channels
    col = np.empty((2, channels), dtype=np.int16)
    acc = np.zeros((2, 2), dtype=np.int64)
    npos = height * width
    pos = 0
    while pos < npos:
        npatch = min(2, npos - pos)
        for p in range(npatch):
            _fill_patch_shifted(x, (pos + p) // width, (pos + p) % width, alphas, betas,
                                col, p, counters)
        if npatch * channels > counters[COLUMN_PEAK]:
            counters[COLUMN_PEAK] = npatch * channels
        f0 = 0
        while f0 < cout:
            nfilt = min(2, cout - f0)
            _gemm_block(col, npatch, rows, f0, nfilt, channels, acc, counters)
            _store_block(acc, npatch, pos, width, f0, nfilt, bias, shift, out, counters)
            f0 += 2
        pos += 2


# -- python-level building blocks -------------------------------------------------


@dataclass
class Im2ColBuffer:
    columns: np.ndarray  # (2, patch_len) int16; rows >= valid_count are scratch
    valid_count: int

    def __post_init__(self):
        if not 0 <= self.valid_count <= MAX_PATCHES:
            raise ContractError(f"column buffer holds at most {MAX_PATCHES} patches")

    @property
    def patch_len(self) -> int:
        return self.columns.shape[1]

    def patches(self) -> np.ndarray:
        return self.columns[: self.valid_count]


def _check_positions(positions: Sequence, spec: LayerSpec) -> list[tuple[int, int]]:
    positions = [tuple(int(v) for v in p) for p in positions]
    if len(positions) > MAX_PATCHES:
        raise ContractError(f"at most {MAX_PATCHES} patches per fill, got {len(positions)}")
    for k, l in positions:
        if not (0 <= k < spec.output_width and 0 <= l < spec.output_width):
            raise ContractError(f"output position ({k}, {l}) outside the layer")
    return positions


def im2col_patches(x: QTensor, spec: LayerSpec, out_positions: Sequence, group: int = 0,
                   counters=None) -> Im2ColBuffer:
    """Zero-padded receptive fields in (kernel row, kernel col, channel) order."""
    positions = _check_positions(out_positions, spec)
    counters = new_counter_array() if counters is None else counters
    if spec.kind == DWSEP:
        spec = spec.depthwise_spec()
    cin_g = spec.in_channels // spec.effective_groups
    col = np.zeros((MAX_PATCHES, spec.kernel**2 * cin_g), dtype=np.int16)
    for p, (k, l) in enumerate(positions):
        _fill_patch(x.array, k, l, spec.kernel, group * cin_g, cin_g, col, p, counters)
    return Im2ColBuffer(col, len(positions))


def im2col_patches_shifted(x: QTensor, spec: LayerSpec, table: Optional[ShiftTable],
                           out_positions: Sequence, counters=None) -> Im2ColBuffer:
    """One channel vector per position, channel m read at (k + alpha_m, l + beta_m)."""
    if spec.kind != SHIFT:
        raise ConfigurationError(f"shifted im2col needs a shift layer, got {spec.kind}")
    positions = _check_positions(out_positions, spec)
    table = spec.shift_table if table is None else table
    table.validate(spec.in_channels, spec.kernel)
    counters = new_counter_array() if counters is None else counters
    alphas = np.asarray(table.alphas, dtype=np.int64)
    betas = np.asarray(table.betas, dtype=np.int64)
    col = np.zeros((MAX_PATCHES, spec.in_channels), dtype=np.int16)
    for p, (k, l) in enumerate(positions):
        _fill_patch_shifted(x.array, k, l, alphas, betas, col, p, counters)
    return Im2ColBuffer(col, len(positions))


def gemm_2x2_packed(buf: Im2ColBuffer, w: QWeights, filter_pair: Sequence[int],
                    bias=None, shift: Optional[int] = None, counters=None) -> np.ndarray:
    """Dot products of the buffered patches with up to two filters.

    Returns the raw int64 accumulators, shape (valid_count, len(filter_pair)),
    or, when ``shift`` is given, the requantized int8 outputs (bias added first).
    Filters must be consecutive, as in the layer kernels.
    """
    filters = [int(f) for f in filter_pair]
    if not 1 <= len(filters) <= 2:
        raise ContractError("filter_pair must name one or two filters")
    if len(filters) == 2 and filters[1] != filters[0] + 1:
        raise ContractError("filter pair must be consecutive")
    if not all(0 <= f < w.out_channels for f in filters):
        raise DimensionError(f"filter index outside 0..{w.out_channels - 1}")
    rows = _widen_filters(w.array)
    if rows.shape[1] != buf.patch_len:
        raise DimensionError(f"patch length {buf.patch_len} != filter length {rows.shape[1]}")
    counters = new_counter_array() if counters is None else counters
    acc = np.zeros((2, 2), dtype=np.int64)
    _gemm_block(buf.columns, buf.valid_count, rows, filters[0], len(filters), buf.patch_len,
                acc, counters)
    acc = acc[: buf.valid_count, : len(filters)].copy()
    if shift is None:
        return acc
    if bias is not None:
        acc = acc + np.asarray(bias, dtype=np.int64)[filters]
    return np.clip(acc >> int(shift), -128, 127).astype(np.int8)


# -- layer kernels ------------------------------------------------------------------


def _counters(counters):
    return new_counter_array() if counters is None else counters


def _run(x: QTensor, w: QWeights, groups: int, shift: int, dec_out: int, counters) -> QTensor:
    out = np.empty((x.height, x.width, w.out_channels), dtype=np.int8)
    bias = _NO_BIAS if w.bias is None else w.bias
    _conv_fast_kernel(x.array, w.array, bias, groups, shift, out, counters)
    return from_array(out, dec_out)


def conv_standard_fast(x: QTensor, w: QWeights, spec: LayerSpec, counters=None) -> QTensor:
    if spec.kind not in (STANDARD, GROUPED) or spec.effective_groups != 1:
        raise ConfigurationError("conv_standard_fast needs an ungrouped standard layer")
    check_input(x, spec)
    k = spec.kernel
    check_weights(w, (k, k, spec.in_channels, spec.out_channels), spec.dec_weight)
    return _run(x, w, 1, spec.output_shift(), spec.dec_output, _counters(counters))


def conv_grouped_fast(x: QTensor, w: QWeights, spec: LayerSpec, counters=None) -> QTensor:
    """im2col-GEMM applied group by group."""
    if spec.kind not in (STANDARD, GROUPED):
        raise ConfigurationError(f"conv_grouped_fast cannot run a {spec.kind} layer")
    g = spec.effective_groups
    check_input(x, spec)
    k = spec.kernel
    check_weights(w, (k, k, spec.in_channels // g, spec.out_channels), spec.dec_weight)
    return _run(x, w, g, spec.output_shift(), spec.dec_output, _counters(counters))


def conv_dwsep_fast(x: QTensor, w_dw: QWeights, w_pw: QWeights, spec: LayerSpec,
                    counters=None) -> QTensor:
    if spec.kind != DWSEP:
        raise ConfigurationError(f"expected a depthwise separable layer, got {spec.kind}")
    counters = _counters(counters)
    mid = conv_grouped_fast(x, w_dw, spec.depthwise_spec(), counters)
    return conv_standard_fast(mid, w_pw, spec.pointwise_spec(), counters)


def conv_shift_fast(x: QTensor, w_pw: QWeights, spec: LayerSpec, table=None,
                    counters=None) -> QTensor:
    """Shift folded into the im2col fill, then a pointwise GEMM."""
    if spec.kind != SHIFT:
        raise ConfigurationError(f"expected a shift layer, got {spec.kind}")
    table = spec.shift_table if table is None else table
    table.validate(spec.in_channels, spec.kernel)
    check_input(x, spec)
    pw = spec.pointwise_spec()
    check_weights(w_pw, (1, 1, spec.in_channels, spec.out_channels), pw.dec_weight)
    out = np.empty((x.height, x.width, w_pw.out_channels), dtype=np.int8)
    bias = _NO_BIAS if w_pw.bias is None else w_pw.bias
    _shift_fast_kernel(
        x.array,
        np.asarray(table.alphas, dtype=np.int64),
        np.asarray(table.betas, dtype=np.int64),
        w_pw.array, bias, pw.output_shift(), out, _counters(counters),
    )
    return from_array(out, pw.dec_output)


def run_fast(spec: LayerSpec, x: QTensor, weights, counters=None) -> QTensor:
    if spec.kind == STANDARD:
        return conv_standard_fast(x, weights, spec, counters)
    if spec.kind == GROUPED:
        return conv_grouped_fast(x, weights, spec, counters)
    if spec.kind == DWSEP:
        w_dw, w_pw = weights
        return conv_dwsep_fast(x, w_dw, w_pw, spec, counters)
    if spec.kind == SHIFT:
        return conv_shift_fast(x, weights, spec, counters=counters)
    if spec.kind == ADD:
        raise UnsupportedPathError("add convolution has no packed-MAC fast path")
    raise ConfigurationError(f"unknown kind {spec.kind}")
