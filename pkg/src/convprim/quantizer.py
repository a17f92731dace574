"""Power-of-two symmetric 8-bit quantization.

    dec = ceil(log2(max|x|)),   q = floor(x * 2**(7 - dec))   saturated to int8.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .qtensor import INT8_MAX, INT8_MIN, QTensor


@dataclass(frozen=True, eq=False)
class FloatTensor:
    height: int
    width: int
    channels: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64).reshape(-1)
        if data.size != self.height * self.width * self.channels:
            raise DimensionError(
                f"data length {data.size} != {self.height}*{self.width}*{self.channels}"
            )
        if not np.all(np.isfinite(data)):
            raise DomainError("float tensor contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.shape)

    @classmethod
    def from_array(cls, a) -> "FloatTensor":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 3:
            raise DimensionError(f"expected (H, W, C), got {a.shape}")
        return cls(a.shape[0], a.shape[1], a.shape[2], a.reshape(-1))


def ceil_log2(value: float) -> int:
    """Exact ceil(log2(value)) for a positive finite float."""
    mantissa, exponent = math.frexp(value)  # value = mantissa * 2**exponent, mantissa in [0.5, 1)
    return exponent - 1 if mantissa == 0.5 else exponent


def choose_dec(t) -> int:
    values = np.asarray(t.data if isinstance(t, FloatTensor) else t, dtype=np.float64)
    if values.size == 0:
        raise DomainError("cannot choose a scale for an empty tensor")
    if not np.all(np.isfinite(values)):
        raise DomainError("tensor contains non-finite values")
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 0
    return ceil_log2(peak)


def quantize_values(values, dec: int) -> np.ndarray:
    """Quantize an array of any shape, returning int8 of the same shape."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DomainError("cannot quantize non-finite values")
    scaled = np.floor(np.ldexp(values, 7 - int(dec)))
    return np.clip(scaled, INT8_MIN, INT8_MAX).astype(np.int8)


def quantize(t: FloatTensor, dec: int) -> QTensor:
    return QTensor(t.height, t.width, t.channels, quantize_values(t.data, dec), dec)


def dequantize_values(values, dec: int) -> np.ndarray:
    return np.ldexp(np.asarray(values, dtype=np.float64), int(dec) - 7)


def dequantize(t: QTensor) -> FloatTensor:
    return FloatTensor(t.height, t.width, t.channels, dequantize_values(t.data, t.dec))


def quantize_bias(bias, dec_weight: int, dec_input: int) -> np.ndarray:
    """Biases go straight to accumulator scale as int32.

    The accumulator of w*x carries exponent ``dec_weight + dec_input - 14``, so
    a real bias b becomes floor(b * 2**(14 - dec_weight - dec_input)).
    """
    bias = np.asarray(bias, dtype=np.float64)
    if not np.all(np.isfinite(bias)):
        raise DomainError("cannot quantize non-finite bias")
    scaled = np.floor(np.ldexp(bias, 14 - int(dec_weight) - int(dec_input)))
    info = np.iinfo(np.int32)
    return np.clip(scaled, info.min, info.max).astype(np.int32)
