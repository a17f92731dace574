"""Batch-norm folding, and a standalone quantized BN for add convolution.

Folding happens in real arithmetic before quantization: for output channel n
with a = gamma / sqrt(var + eps),

    w'[..., n] = a * w[..., n]        b'[n] = beta + (b[n] - mean) * a

Add convolution cannot absorb BN this way (the L1 distance is not linear in
the weights), so it keeps an explicit integer affine layer afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, DomainError
from .qtensor import INT8_MAX, INT8_MIN, QTensor, from_array
from .quantizer import FloatTensor, choose_dec, quantize_values


@dataclass(frozen=True, eq=False)
class BNParams:
    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        arrays = {}
        for name in ("gamma", "beta", "mean", "var"):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64))
            if a.ndim != 1:
                raise DimensionError(f"{name} must be one value per channel")
            arrays[name] = a
        sizes = {a.size for a in arrays.values()}
        if len(sizes) != 1:
            raise DimensionError(f"BN parameter lengths differ: { {k: v.size for k, v in arrays.items()} }")
        if np.any(arrays["var"] + self.eps <= 0):
            raise DomainError("var + eps must be positive on every channel")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def channels(self) -> int:
        return self.gamma.size

    def multiplier(self) -> np.ndarray:
        return self.gamma / np.sqrt(self.var + self.eps)

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Real-valued BN over the last axis."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape[-1] != self.channels:
            raise DimensionError(f"last axis {y.shape[-1]} != {self.channels} BN channels")
        return (y - self.mean) * self.multiplier() + self.beta


def fold_bn(w_float, b_float: Optional[np.ndarray], bn: BNParams):
    """Fold ``bn`` into weights whose last axis is the output channel.

    ``w_float`` may be an ndarray of any rank or a FloatTensor (channels = outputs);
    the result has the same type and shape. A missing bias counts as zeros.
    """
    is_tensor = isinstance(w_float, FloatTensor)
    w = w_float.array if is_tensor else np.asarray(w_float, dtype=np.float64)
    if w.shape[-1] != bn.channels:
        raise DimensionError(f"weights have {w.shape[-1]} output channels, BN has {bn.channels}")
    b = np.zeros(bn.channels) if b_float is None else np.asarray(b_float, dtype=np.float64)
    if b.shape != (bn.channels,):
        raise DimensionError(f"bias shape {b.shape} != ({bn.channels},)")
    a = bn.multiplier()
    w_folded = w * a
    b_folded = bn.beta + (b - bn.mean) * a
    if is_tensor:
        w_folded = FloatTensor.from_array(w_folded)
    return w_folded, b_folded


@dataclass(frozen=True, eq=False)
class QBNLayer:
    """Per-channel integer affine: ((x * scale) >> shift_amount) + offset, saturated.

    A negative ``shift_amount`` means a left shift. ``offset`` is at output scale.
    """

    scale: np.ndarray  # int8 multipliers
    dec_scale: np.ndarray  # exponent of each multiplier
    shift_amount: np.ndarray
    offset: np.ndarray  # int32
    dec_output: int

    def __post_init__(self):
        scale = np.asarray(self.scale)
        n = scale.size
        for name in ("dec_scale", "shift_amount", "offset"):
            if np.asarray(getattr(self, name)).shape != (n,):
                raise DimensionError(f"{name} must have {n} entries")
        if scale.size and (scale.min() < INT8_MIN or scale.max() > INT8_MAX):
            raise DimensionError("scale must be int8")
        object.__setattr__(self, "scale", scale.astype(np.int8))
        object.__setattr__(self, "dec_scale", np.asarray(self.dec_scale, dtype=np.int64))
        object.__setattr__(self, "shift_amount", np.asarray(self.shift_amount, dtype=np.int64))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=np.int32))

    @property
    def channels(self) -> int:
        return self.scale.size


def make_qbn(bn: BNParams, dec_input: int, dec_output: int) -> QBNLayer:
    """Quantize BN to integers; each multiplier gets its own power-of-two exponent."""
    a = bn.multiplier()
    b = bn.beta - bn.mean * a
    dec_scale = np.array([choose_dec(np.array([v])) for v in a], dtype=np.int64)
    scale = np.array([quantize_values(v, d) for v, d in zip(a, dec_scale)], dtype=np.int8)
    # x*s carries exponent dec_input + dec_scale - 7 relative to the output grid
    shift = 7 + dec_output - dec_scale - dec_input
    info = np.iinfo(np.int32)
    offset = np.clip(np.floor(np.ldexp(b, 7 - dec_output)), info.min, info.max).astype(np.int32)
    return QBNLayer(scale, dec_scale, shift, offset, dec_output)


def apply_qbn(x: QTensor, layer: QBNLayer) -> QTensor:
    if x.channels != layer.channels:
        raise DimensionError(f"input has {x.channels} channels, BN layer has {layer.channels}")
    prod = x.array.astype(np.int64) * layer.scale.astype(np.int64)
    right = np.maximum(layer.shift_amount, 0)
    left = np.maximum(-layer.shift_amount, 0)
    y = ((prod << left) >> right) + layer.offset
    return from_array(np.clip(y, INT8_MIN, INT8_MAX).astype(np.int8), layer.dec_output)
